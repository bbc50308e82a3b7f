#include "catdse/platform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"

namespace catdse {

void PlatformProfile::validate() const {
    if (total_aie < 1) throw ConfigError("total_aie", "must be >= 1");
    if (total_buffer_bytes <= 0) throw ConfigError("total_buffer_bytes", "must be > 0");
    if (m_window_bytes < 4) throw ConfigError("m_window_bytes", "must be >= 4");
    if (!(t_calc_ns > 0.0)) throw ConfigError("t_calc_ns", "must be > 0");
    if (!(t_window_ns > 0.0)) throw ConfigError("t_window_ns", "must be > 0");
    if (!(aie_clock_ghz > 0.0)) throw ConfigError("aie_clock_ghz", "must be > 0");
    if (!(pl_clock_mhz > 0.0)) throw ConfigError("pl_clock_mhz", "must be > 0");
}

PlatformProfile vck5000_default() {
    PlatformProfile p;
    p.name = "vck5000";
    p.total_aie = 400;
    // 23.9 MiB, binary units.
    p.total_buffer_bytes = 25'060'966;
    p.m_window_bytes = 32'768;
    p.t_calc_ns = 3522.0;
    p.t_window_ns = 880.0;
    p.aie_clock_ghz = 1.25;
    p.pl_clock_mhz = 300.0;
    return p;
}

Count derive_plio_aie(const PlatformProfile& p) {
    if (!(p.t_window_ns > 0.0)) throw ConfigError("t_window_ns", "must be > 0");
    const auto ratio = static_cast<Count>(std::floor(p.t_calc_ns / p.t_window_ns));
    return std::max<Count>(ratio, 1);
}

PlatformProfile load_profile(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("", "profile must be a JSON object");
    static const std::set<std::string> keys = {"name",        "total_aie",     "total_buffer_bytes",
                                               "m_window_bytes", "t_calc_ns",  "t_window_ns",
                                               "aie_clock_ghz",  "pl_clock_mhz"};
    for (const auto& [key, _] : doc.items()) {
        if (!keys.contains(key)) throw ConfigError(key, "unknown key in profile");
    }
    for (const auto& key : keys) {
        if (!doc.contains(key)) throw ConfigError(key, "missing required key");
    }
    auto integer = [&](const char* key) {
        const auto& v = doc.at(key);
        if (!v.is_number_integer()) throw ConfigError(key, "must be an integer");
        return v.get<Count>();
    };
    auto number = [&](const char* key) {
        const auto& v = doc.at(key);
        if (!v.is_number()) throw ConfigError(key, "must be a number");
        return v.get<double>();
    };
    if (!doc.at("name").is_string()) throw ConfigError("name", "must be a string");

    PlatformProfile p;
    p.name = doc.at("name").get<std::string>();
    p.total_aie = integer("total_aie");
    p.total_buffer_bytes = integer("total_buffer_bytes");
    p.m_window_bytes = integer("m_window_bytes");
    p.t_calc_ns = number("t_calc_ns");
    p.t_window_ns = number("t_window_ns");
    p.aie_clock_ghz = number("aie_clock_ghz");
    p.pl_clock_mhz = number("pl_clock_mhz");
    p.validate();
    return p;
}

PlatformProfile load_profile_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("profile", "cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("profile", path.string() + ": " + e.what());
    }
    return load_profile(doc);
}

nlohmann::json to_json(const PlatformProfile& p) {
    return {{"name", p.name},
            {"total_aie", p.total_aie},
            {"total_buffer_bytes", p.total_buffer_bytes},
            {"m_window_bytes", p.m_window_bytes},
            {"t_calc_ns", p.t_calc_ns},
            {"t_window_ns", p.t_window_ns},
            {"aie_clock_ghz", p.aie_clock_ghz},
            {"pl_clock_mhz", p.pl_clock_mhz}};
}

PlatformProfile effective_profile(const PlatformProfile& p, const TransformerConfig& cfg) {
    PlatformProfile out = p;
    if (cfg.allowable_aie) out.total_aie = std::min(out.total_aie, *cfg.allowable_aie);
    return out;
}

}  // namespace catdse
