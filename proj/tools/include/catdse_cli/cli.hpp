// cli.hpp: command implementations behind the cat-dse executable.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "catdse/planner.hpp"

namespace catdse::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kArtifact = 3, kValidation = 4 };

struct RunBundle {
    std::string model;               // path or builtin name; empty means "take it from the plan"
    std::string profile = "vck5000";  // path or builtin name
    bool independent_linear = true;
    bool strict_factor1 = false;
    bool force_pipelined_ffn = false;
    std::filesystem::path out = ".";
    std::optional<std::filesystem::path> plan;  // defaults to <out>/plan.json
    bool timeline = false;
};

/// Builtin data root (models/, profiles/).
std::filesystem::path data_dir();
/// CAT_DSE_PROFILE_DIR when set, else <data_dir>/profiles.
std::filesystem::path profile_dir();

TransformerConfig resolve_model(const std::string& path_or_name);
PlatformProfile resolve_profile(const std::string& path_or_name);

/// "a..b", "a,b,c" or "n". Throws ConfigError.
std::vector<Count> parse_batches(const std::string& text);

int cmd_design(const RunBundle& b, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunBundle& b, const std::vector<Count>& batches, std::ostream& out, std::ostream& err);
int cmd_codegen(const RunBundle& b, std::ostream& out, std::ostream& err);
int cmd_table(const RunBundle& b, const std::string& which, std::ostream& out, std::ostream& err);

/// Markdown decision log with the worked arithmetic.
std::string decisions_markdown(const EdpuPlan& plan, const PlatformProfile& effective, bool show_strict);

}  // namespace catdse::cli
