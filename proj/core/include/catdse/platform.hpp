#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "catdse/workload.hpp"

namespace catdse {

/// Intrinsic hardware parameters of an AIE-based board.
struct PlatformProfile {
    std::string name;
    Count total_aie = 0;
    Count total_buffer_bytes = 0;
    Count m_window_bytes = 0;
    double t_calc_ns = 0.0;    // one single-core MMSZ^3 iteration
    double t_window_ns = 0.0;  // one PLIO transfer of one AIE window
    double aie_clock_ghz = 0.0;
    double pl_clock_mhz = 0.0;

    void validate() const;

    bool operator==(const PlatformProfile&) const = default;
};

/// VCK5000: 400 AIEs, 23.9 MiB on-chip SRAM, AIE 1.25 GHz / PL 300 MHz.
PlatformProfile vck5000_default();

/// Max cores one packet-switched PLIO can serve without stalling compute:
/// floor(t_calc / t_window), at least 1.
Count derive_plio_aie(const PlatformProfile& p);

PlatformProfile load_profile(const nlohmann::json& doc);
PlatformProfile load_profile_file(const std::filesystem::path& path);
nlohmann::json to_json(const PlatformProfile& p);

/// The profile with total_aie capped by the model's allowable AIE count.
PlatformProfile effective_profile(const PlatformProfile& p, const TransformerConfig& cfg);

}  // namespace catdse
