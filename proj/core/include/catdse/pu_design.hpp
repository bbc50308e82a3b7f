// pu_design.hpp: AIE MM processing-unit geometries and MM block tiling.
//
// A PU is a tile_m x tile_k x tile_n grid of cores. Each core computes one
// MMSZ^3 block per invocation, so one PU invocation covers
// (tile_m*MMSZ) x (tile_k*MMSZ) x (tile_n*MMSZ). Cores sharing (m, n) form a
// k-cascade chain whose tail drains the partial sums.
//
// PLIO routing, packet-switch mode: every input PLIO carries a set of operand
// block streams (A(m,k) or B(k,n)); a stream is broadcast to every core that
// consumes it. Every output PLIO drains a set of cascade chains. The number
// of streams on one PLIO is its served-core count and is bounded by
// PLIO_AIE = floor(T_calc / T_window).
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "catdse/platform.hpp"
#include "catdse/workload.hpp"

namespace catdse {

enum class PuKind { Large, Standard, Small };

std::string_view to_string(PuKind k);
PuKind pu_kind_from_string(std::string_view s);

struct TileShape {
    Count m = 1;
    Count k = 1;
    Count n = 1;
    bool operator==(const TileShape&) const = default;
};

struct PuSpec {
    PuKind kind = PuKind::Small;
    Count core_count = 0;
    Count in_plio = 0;
    Count out_plio = 0;
    TileShape tile;
    Count mmsz = 1;

    std::string name() const { return std::string(to_string(kind)); }
    Count extent_m() const { return tile.m * mmsz; }
    Count extent_k() const { return tile.k * mmsz; }
    Count extent_n() const { return tile.n * mmsz; }
    Count macs_per_invocation() const { return extent_m() * extent_k() * extent_n(); }

    bool operator==(const PuSpec&) const = default;
};

/// Geometry of a PU kind at the given single-core size.
PuSpec make_pu_spec(PuKind kind, Count mmsz);

nlohmann::json to_json(const PuSpec& spec);
PuSpec pu_spec_from_json(const nlohmann::json& j);

struct BlockCoord {
    Count m = 0;
    Count k = 0;
    Count n = 0;
    bool operator==(const BlockCoord&) const = default;
};

/// Cores are numbered row-major over (m, k, n).
Count local_core_index(const PuSpec& spec, BlockCoord c);
BlockCoord core_coord(const PuSpec& spec, Count index);

enum class PlioDirection { In, Out };
enum class Operand { A, B, C };

struct PlioRoute {
    PlioDirection direction = PlioDirection::In;
    Operand operand = Operand::A;
    // One entry per packet stream; each lists the local core indices it reaches.
    std::vector<std::vector<Count>> packets;
};

std::vector<PlioRoute> route_plios(const PuSpec& spec);
Count max_served_per_plio(const PuSpec& spec);

struct FanoutViolation {
    std::string where;
    Count served = 0;
    Count limit = 0;
};

/// Fan-out audit over the routing table, plus the PLIO_AIE^2 bound on each
/// 2D (k-slice) core group.
std::vector<FanoutViolation> audit_fanout(const PuSpec& spec, Count plio_aie);

/// Largest power of two s with s^2 * bytes(data_bits) <= m_window / 4.
/// Throws PlanningError when even s = 1 does not fit.
Count max_mmsz(const PlatformProfile& p, int data_bits);

struct PuCatalog {
    std::vector<PuSpec> specs;  // largest first
    std::vector<std::string> warnings;

    const PuSpec* find(PuKind kind) const;
    /// Throws PlanningError when the catalog is empty.
    const PuSpec& largest() const;
};

/// The three PU geometries, each kept only if it passes the fan-out audit.
PuCatalog enumerate_pu_specs(const PlatformProfile& p, int data_bits);

struct TilingPlan {
    std::string pu;
    Count m_tiles = 0;
    Count k_tiles = 0;
    Count n_tiles = 0;
    Count invocations = 0;
    Count padded_m = 0;
    Count padded_k = 0;
    Count padded_n = 0;
    Count useful_macs = 0;
    Count padded_macs = 0;
    double efficiency = 0.0;

    Count output_tiles() const { return m_tiles * n_tiles; }
};

/// Zero-padded block decomposition of one MM instance onto one PU.
TilingPlan tile_mm(const MatMulSpec& mm, const PuSpec& pu);

/// Sequential invocation rounds when `instances` identical PUs split the
/// output tiles of a plan; k-tiles of one output tile stay on one PU.
Count invocation_rounds(const TilingPlan& plan, Count instances);

/// max(T_calc, served streams per PLIO * T_window).
double pu_invocation_time(const PuSpec& pu, const PlatformProfile& p);

}  // namespace catdse
