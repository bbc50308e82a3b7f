#pragma once

#include <stdexcept>
#include <string>

namespace catdse {

/// Invalid model/profile configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The customization strategy could not produce a plan.
class PlanningError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A plan and a workload disagree, or a plan cannot be executed.
class SimulationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Graph emission failed (e.g. a plan refers to an unknown PU spec).
class GenerationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A serialized artifact (plan, graph) is malformed.
class ArtifactError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace catdse
