#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "catdse/planner.hpp"
#include "catdse/platform.hpp"
#include "catdse/workload.hpp"

namespace testutil {

inline std::string data_path(const std::string& rel) { return std::string(CATDSE_DATA_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline catdse::TransformerConfig model(const std::string& name) {
    return catdse::load_model_config(nlohmann::json::parse(slurp(data_path("models/" + name + ".json"))));
}

inline catdse::TransformerConfig bert() { return model("bert-base"); }
inline catdse::TransformerConfig vit() { return model("vit-base"); }
inline catdse::TransformerConfig limited() { return model("bert-base-limited"); }

}  // namespace testutil
