#include "catdse/pu_design.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"

namespace catdse {

namespace {

Count ceil_div(Count a, Count b) { return (a + b - 1) / b; }

// Split `streams` into `plios` contiguous chunks of ceil(streams / plios).
void distribute(std::vector<PlioRoute>& out, PlioDirection dir, Operand operand,
                std::vector<std::vector<Count>> streams, Count plios) {
    if (plios <= 0) return;
    const Count per = std::max<Count>(1, ceil_div(static_cast<Count>(streams.size()), plios));
    for (Count p = 0; p < plios; ++p) {
        PlioRoute route{dir, operand, {}};
        for (Count s = p * per; s < std::min<Count>((p + 1) * per, streams.size()); ++s) {
            route.packets.push_back(std::move(streams[s]));
        }
        out.push_back(std::move(route));
    }
}

}  // namespace

std::string_view to_string(PuKind k) {
    switch (k) {
        case PuKind::Large: return "Large";
        case PuKind::Standard: return "Standard";
        case PuKind::Small: return "Small";
    }
    return "?";
}

PuKind pu_kind_from_string(std::string_view s) {
    if (s == "Large") return PuKind::Large;
    if (s == "Standard") return PuKind::Standard;
    if (s == "Small") return PuKind::Small;
    throw ArtifactError("unknown PU kind '" + std::string(s) + "'");
}

PuSpec make_pu_spec(PuKind kind, Count mmsz) {
    switch (kind) {
        case PuKind::Large: return {kind, 64, 8, 4, {4, 4, 4}, mmsz};
        case PuKind::Standard: return {kind, 16, 4, 1, {2, 4, 2}, mmsz};
        case PuKind::Small: return {kind, 4, 2, 1, {1, 1, 4}, mmsz};
    }
    throw PlanningError("unknown PU kind");
}

nlohmann::json to_json(const PuSpec& spec) {
    return {{"name", spec.name()},
            {"core_count", spec.core_count},
            {"in_plio", spec.in_plio},
            {"out_plio", spec.out_plio},
            {"tile", {spec.tile.m, spec.tile.k, spec.tile.n}},
            {"mmsz", spec.mmsz}};
}

PuSpec pu_spec_from_json(const nlohmann::json& j) {
    try {
        PuSpec s;
        s.kind = pu_kind_from_string(j.at("name").get<std::string>());
        s.core_count = j.at("core_count").get<Count>();
        s.in_plio = j.at("in_plio").get<Count>();
        s.out_plio = j.at("out_plio").get<Count>();
        const auto& t = j.at("tile");
        if (!t.is_array() || t.size() != 3) throw ArtifactError("PU tile must be [m,k,n]");
        s.tile = {t[0].get<Count>(), t[1].get<Count>(), t[2].get<Count>()};
        s.mmsz = j.at("mmsz").get<Count>();
        if (s.core_count != s.tile.m * s.tile.k * s.tile.n) {
            throw ArtifactError("PU " + s.name() + ": core_count does not match tile grid");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError(std::string("malformed PU spec: ") + e.what());
    }
}

Count local_core_index(const PuSpec& spec, BlockCoord c) {
    return (c.m * spec.tile.k + c.k) * spec.tile.n + c.n;
}

BlockCoord core_coord(const PuSpec& spec, Count index) {
    const Count n = index % spec.tile.n;
    const Count k = (index / spec.tile.n) % spec.tile.k;
    const Count m = index / (spec.tile.n * spec.tile.k);
    return {m, k, n};
}

std::vector<PlioRoute> route_plios(const PuSpec& spec) {
    const TileShape& t = spec.tile;
    std::vector<std::vector<Count>> a_streams, b_streams, chains;
    for (Count m = 0; m < t.m; ++m) {
        for (Count k = 0; k < t.k; ++k) {
            auto& s = a_streams.emplace_back();
            for (Count n = 0; n < t.n; ++n) s.push_back(local_core_index(spec, {m, k, n}));
        }
    }
    for (Count k = 0; k < t.k; ++k) {
        for (Count n = 0; n < t.n; ++n) {
            auto& s = b_streams.emplace_back();
            for (Count m = 0; m < t.m; ++m) s.push_back(local_core_index(spec, {m, k, n}));
            std::sort(s.begin(), s.end());
        }
    }
    for (Count m = 0; m < t.m; ++m) {
        for (Count n = 0; n < t.n; ++n) {
            auto& s = chains.emplace_back();
            for (Count k = 0; k < t.k; ++k) s.push_back(local_core_index(spec, {m, k, n}));
        }
    }
    const Count a_plios = std::max<Count>(1, spec.in_plio / 2);
    const Count b_plios = std::max<Count>(1, spec.in_plio - a_plios);

    std::vector<PlioRoute> routes;
    distribute(routes, PlioDirection::In, Operand::A, std::move(a_streams), a_plios);
    distribute(routes, PlioDirection::In, Operand::B, std::move(b_streams), b_plios);
    distribute(routes, PlioDirection::Out, Operand::C, std::move(chains), spec.out_plio);
    return routes;
}

Count max_served_per_plio(const PuSpec& spec) {
    Count served = 0;
    for (const auto& r : route_plios(spec)) served = std::max<Count>(served, r.packets.size());
    return served;
}

std::vector<FanoutViolation> audit_fanout(const PuSpec& spec, Count plio_aie) {
    std::vector<FanoutViolation> out;
    const auto routes = route_plios(spec);
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const auto served = static_cast<Count>(routes[i].packets.size());
        if (served > plio_aie) {
            const char* dir = routes[i].direction == PlioDirection::In ? "in" : "out";
            out.push_back({spec.name() + " plio " + dir + "#" + std::to_string(i), served, plio_aie});
        }
    }
    const Count group = spec.tile.m * spec.tile.n;
    if (group > plio_aie * plio_aie) {
        out.push_back({spec.name() + " 2D core group", group, plio_aie * plio_aie});
    }
    return out;
}

Count max_mmsz(const PlatformProfile& p, int data_bits) {
    const Count bytes = std::max(1, data_bits / 8);
    // s^2 * bytes <= m_window / 4, kept in integers.
    auto fits = [&](Count s) { return s * s * bytes * 4 <= p.m_window_bytes; };
    if (!fits(1)) {
        throw PlanningError("infeasible platform: no power-of-two MMSZ fits m_window_bytes=" +
                            std::to_string(p.m_window_bytes));
    }
    Count s = 1;
    while (fits(s * 2)) s *= 2;
    return s;
}

const PuSpec* PuCatalog::find(PuKind kind) const {
    for (const auto& s : specs) {
        if (s.kind == kind) return &s;
    }
    return nullptr;
}

const PuSpec& PuCatalog::largest() const {
    if (specs.empty()) throw PlanningError("no AIE MM PU geometry is feasible on this platform");
    return *std::max_element(specs.begin(), specs.end(), [](const PuSpec& a, const PuSpec& b) {
        return a.core_count < b.core_count;
    });
}

PuCatalog enumerate_pu_specs(const PlatformProfile& p, int data_bits) {
    const Count plio_aie = derive_plio_aie(p);
    if (plio_aie < 2) {
        throw PlanningError("PLIO_AIE=" + std::to_string(plio_aie) +
                            " < 2: packet-switched PU expansion is impossible");
    }
    const Count mmsz = max_mmsz(p, data_bits);
    PuCatalog catalog;
    for (PuKind kind : {PuKind::Large, PuKind::Standard, PuKind::Small}) {
        PuSpec spec = make_pu_spec(kind, mmsz);
        const auto violations = audit_fanout(spec, plio_aie);
        if (!violations.empty()) {
            const auto& v = violations.front();
            catalog.warnings.push_back(spec.name() + " omitted: " + v.where + " serves " +
                                       std::to_string(v.served) + " > " + std::to_string(v.limit));
            continue;
        }
        catalog.specs.push_back(spec);
    }
    return catalog;
}

TilingPlan tile_mm(const MatMulSpec& mm, const PuSpec& pu) {
    TilingPlan t;
    t.pu = pu.name();
    t.m_tiles = ceil_div(mm.m, pu.extent_m());
    t.k_tiles = ceil_div(mm.k, pu.extent_k());
    t.n_tiles = ceil_div(mm.n, pu.extent_n());
    t.invocations = t.m_tiles * t.k_tiles * t.n_tiles;
    t.padded_m = t.m_tiles * pu.extent_m();
    t.padded_k = t.k_tiles * pu.extent_k();
    t.padded_n = t.n_tiles * pu.extent_n();
    t.useful_macs = mm.m * mm.k * mm.n;
    t.padded_macs = t.padded_m * t.padded_k * t.padded_n;
    t.efficiency = static_cast<double>(t.useful_macs) / static_cast<double>(t.padded_macs);
    return t;
}

Count invocation_rounds(const TilingPlan& plan, Count instances) {
    if (instances < 1) throw PlanningError("a PU group needs at least one instance");
    return ceil_div(plan.output_tiles(), instances) * plan.k_tiles;
}

double pu_invocation_time(const PuSpec& pu, const PlatformProfile& p) {
    return std::max(p.t_calc_ns, static_cast<double>(max_served_per_plio(pu)) * p.t_window_ns);
}

}  // namespace catdse
