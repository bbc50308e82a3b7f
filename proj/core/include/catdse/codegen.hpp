// codegen.hpp: neutral AIE dataflow-graph description of an EdpuPlan.
#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "catdse/planner.hpp"

namespace catdse {

inline constexpr int kGraphVersion = 1;
inline constexpr const char* kGeneratorVersion = "catdse-codegen 1.0";

struct Kernel {
    Count id = 0;
    std::string pu_instance;
    std::array<Count, 3> tile_coord{};  // (m, k, n) block coordinate inside the PU

    bool operator==(const Kernel&) const = default;
};

struct Plio {
    Count id = 0;
    PlioDirection direction = PlioDirection::In;
    std::string pu_instance;
    // Packet-switch group: one entry per packet stream, each listing the
    // kernels it reaches in ascending id order.
    std::vector<std::vector<Count>> packet_group;

    bool operator==(const Plio&) const = default;
};

struct Connection {
    std::string source;
    std::string sink;
    bool operator==(const Connection&) const = default;
};

struct GraphMetadata {
    std::string plan_hash;
    std::string generator_version = kGeneratorVersion;
    Count expected_kernels = 0;

    bool operator==(const GraphMetadata&) const = default;
};

struct GraphDescription {
    std::vector<Kernel> kernels;
    std::vector<Plio> plios;
    std::vector<Connection> connections;
    GraphMetadata metadata;

    bool operator==(const GraphDescription&) const = default;
};

/// FNV-1a 64 over the serialized plan, as 16 hex digits.
std::string plan_hash(const EdpuPlan& plan);

/// Throws GenerationError when an instance has no matching PuSpec.
GraphDescription emit_graph(const EdpuPlan& plan, const PlatformProfile& p);

struct GraphValidation {
    bool ok = true;
    std::vector<std::string> violations;
};

GraphValidation validate_graph(const GraphDescription& g, const PlatformProfile& p);

nlohmann::json to_json(const GraphDescription& g);
/// Throws ArtifactError on malformed documents.
GraphDescription graph_from_json(const nlohmann::json& doc);
std::string to_text(const GraphDescription& g);

}  // namespace catdse
