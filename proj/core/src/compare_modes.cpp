#include <algorithm>
#include <numeric>

#include "catdse/errors.hpp"
#include "catdse/simulator.hpp"

namespace catdse {

namespace {

constexpr Count kBatch = 16;
constexpr Count kParallelAtb = 4;
constexpr Count kNonlinear = 2;  // Transpose, Softmax behind each QK^T

// All times below are in PU invocation times.
struct Ctx {
    const PuSpec* spec;
    Count t(const MatMulSpec& mm, Count pus) const {
        return invocation_rounds(tile_mm(mm, *spec), pus) * mm.count;
    }
};

Count pipe(const std::vector<Count>& services, Count items) {
    const Count sum = std::accumulate(services.begin(), services.end(), Count{0});
    const Count worst = *std::max_element(services.begin(), services.end());
    return sum + kNonlinear + (items - 1) * worst;
}

std::vector<Count> split(Count n, Count parts) {
    std::vector<Count> out;
    for (Count i = 0; i < parts; ++i) out.push_back(n / parts + (i < n % parts ? 1 : 0));
    return out;
}

// One PU per PRG, then each further PU to the current bottleneck (lowest index on ties).
std::vector<Count> balance(const Ctx& c, const std::vector<MatMulSpec>& prgs, Count pus) {
    if (pus < static_cast<Count>(prgs.size())) {
        throw PlanningError("mode comparison: " + std::to_string(pus) + " PU instances cannot cover " +
                            std::to_string(prgs.size()) + " PRGs");
    }
    std::vector<Count> k(prgs.size(), 1);
    for (Count extra = pus - static_cast<Count>(prgs.size()); extra > 0; --extra) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < prgs.size(); ++i) {
            if (c.t(prgs[i], k[i]) > c.t(prgs[worst], k[worst])) worst = i;
        }
        ++k[worst];
    }
    std::vector<Count> services;
    for (std::size_t i = 0; i < prgs.size(); ++i) services.push_back(c.t(prgs[i], k[i]));
    return services;
}

Count max_of(const std::vector<Count>& v, std::size_t from, std::size_t to) {
    return *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(to));
}

}  // namespace

ModeComparison compare_modes(const TransformerConfig& cfg, const PlatformProfile& p) {
    cfg.validate();
    p.validate();
    const PuCatalog catalog = enumerate_pu_specs(p, cfg.data_bits);
    const PuSpec* spec = catalog.find(PuKind::Standard);
    if (!spec) throw PlanningError("mode comparison needs the Standard PU geometry");
    const Ctx c{spec};
    const Count n = p.total_aie / spec->core_count;

    const Count L = cfg.seq_len;
    const Count E = cfg.embed_dim;
    const Count d = cfg.head_dim();
    const Count H = cfg.head;
    const MatMulSpec lin{L, E, d, 1, Stage::Mha, MmRole::QkvLB};
    const MatMulSpec agg{L, E, E, 1, Stage::Mha, MmRole::QkvLB};
    const MatMulSpec blk{L, E, d * kParallelAtb, 1, Stage::Mha, MmRole::QkvLB};
    const MatMulSpec pre{L, d, L, 1, Stage::Mha, MmRole::AtbQKt};
    const MatMulSpec post{L, L, d, 1, Stage::Mha, MmRole::AtbAV};
    const Count heads_per_atb = (H + kParallelAtb - 1) / kParallelAtb;

    std::vector<Count> lat(5);
    lat[0] = kBatch * H * (3 * c.t(lin, n) + c.t(pre, n) + c.t(post, n) + kNonlinear);
    {
        const auto sv = balance(c, {lin, lin, lin, pre, post}, n);
        lat[1] = pipe({max_of(sv, 0, 3), sv[3], sv[4]}, H * kBatch);
    }
    {
        Count lanes = 0;
        for (Count x : split(n, kParallelAtb)) {
            if (x < 1) throw PlanningError("mode comparison: fewer PU instances than ATB lanes");
            lanes = std::max(lanes, heads_per_atb * (c.t(pre, x) + c.t(post, x) + kNonlinear));
        }
        lat[2] = kBatch * (3 * c.t(agg, n) + lanes);
    }
    {
        Count worst = 0;
        for (Count x : split(n, kParallelAtb)) {
            const auto sv = balance(c, {lin, lin, lin, pre, post}, x);
            worst = std::max(worst, pipe({max_of(sv, 0, 3), sv[3], sv[4]}, heads_per_atb * kBatch));
        }
        lat[3] = worst;
    }
    {
        std::vector<MatMulSpec> prgs{blk, blk, blk};
        for (Count a = 0; a < kParallelAtb; ++a) prgs.push_back(pre);
        for (Count a = 0; a < kParallelAtb; ++a) prgs.push_back(post);
        const auto sv = balance(c, prgs, n);
        lat[4] = pipe({max_of(sv, 0, 3), max_of(sv, 3, 3 + kParallelAtb), max_of(sv, 3 + kParallelAtb, sv.size())},
                      heads_per_atb * kBatch);
    }

    const double T = pu_invocation_time(*spec, p);
    ModeComparison out{spec->kind, n, kBatch, {}};
    const char* modes[] = {"Serial", "Pipeline", "Serial", "Pipeline", "Pipeline"};
    const bool indep[] = {false, false, true, false, true};
    const Count par[] = {1, 1, kParallelAtb, kParallelAtb, kParallelAtb};
    const char* desc[] = {
        "per-head linear layers, every MM on all PUs",
        "per-head linear layers, 5-PRG pipeline over heads",
        "aggregated QKV on all PUs, 4 serial ATB lanes",
        "4 independent 5-PRG pipelines over heads",
        "aggregated QKV blocks feeding 4 pipelined ATBs",
    };
    for (int i = 0; i < 5; ++i) {
        ModeRow row;
        row.lab = i + 1;
        row.description = desc[i];
        row.independent_linear = indep[i];
        row.atb_mode = modes[i];
        row.atb_parallelism = par[i];
        row.latency_ns = static_cast<double>(lat[i]) * T;
        row.speedup = static_cast<double>(lat[0]) / static_cast<double>(lat[i]);
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace catdse
