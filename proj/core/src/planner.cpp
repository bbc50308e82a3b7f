#include "catdse/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "catdse/errors.hpp"

namespace catdse {

std::string_view to_string(ParallelMode m) {
    switch (m) {
        case ParallelMode::FullyPipelined: return "FullyPipelined";
        case ParallelMode::HybridSerialAtbParallel: return "HybridSerialAtbParallel";
        case ParallelMode::Serial: return "Serial";
    }
    return "?";
}

std::string_view to_string(Trigger t) {
    switch (t) {
        case Trigger::None: return "None";
        case Trigger::Factor1: return "Factor1";
        case Trigger::Factor2: return "Factor2";
        case Trigger::Both: return "Both";
    }
    return "?";
}

ParallelMode parallel_mode_from_string(std::string_view s) {
    for (auto m : {ParallelMode::FullyPipelined, ParallelMode::HybridSerialAtbParallel,
                   ParallelMode::Serial}) {
        if (to_string(m) == s) return m;
    }
    throw ArtifactError("unknown parallel mode '" + std::string(s) + "'");
}

std::string_view to_string(PrgKind k) {
    switch (k) {
        case PrgKind::QkvLB: return "QkvLB";
        case PrgKind::ProjLB: return "ProjLB";
        case PrgKind::AtbPre: return "AtbPre";
        case PrgKind::AtbPost: return "AtbPost";
        case PrgKind::Ffn1LB: return "Ffn1LB";
        case PrgKind::Ffn2LB: return "Ffn2LB";
    }
    return "?";
}

PrgKind prg_kind_from_string(std::string_view s) {
    for (auto k : {PrgKind::QkvLB, PrgKind::ProjLB, PrgKind::AtbPre, PrgKind::AtbPost,
                   PrgKind::Ffn1LB, PrgKind::Ffn2LB}) {
        if (to_string(k) == s) return k;
    }
    throw ArtifactError("unknown PRG kind '" + std::string(s) + "'");
}

Count max_pipeline_depth(Stage stage) { return stage == Stage::Mha ? 4 : 2; }

double compute_factor1(Stage stage, const TransformerConfig& cfg, const PlatformProfile& p,
                       const PuCatalog& catalog, Factor1Formula formula) {
    const PuSpec& largest = catalog.largest();
    const double numerator =
        static_cast<double>(cfg.seq_len) * static_cast<double>(cfg.embed_dim) *
        static_cast<double>(stage == Stage::Mha ? cfg.embed_dim : cfg.dff);
    const Count plio_aie = derive_plio_aie(p);
    const Count n_max = formula == Factor1Formula::WorkedValue
                            ? p.total_aie / largest.core_count
                            : p.total_aie / (plio_aie * plio_aie);
    if (n_max == 0) return std::numeric_limits<double>::infinity();
    const double side = static_cast<double>(plio_aie * largest.mmsz);
    return numerator / (static_cast<double>(n_max) * side * side * side);
}

MhaBufferBreakdown mha_buffer_breakdown(const TransformerConfig& cfg, Count p_atb) {
    const Count L = cfg.seq_len;
    const Count E = cfg.embed_dim;
    const Count d = cfg.head_dim();
    const Count bytes = cfg.bytes_per_element();
    MhaBufferBreakdown b;
    b.qkv_out = 3 * L * (d * p_atb) * bytes;
    b.atb_io = 4 * L * d * p_atb * bytes;
    b.attention = (L * L * p_atb) / 2 * bytes;
    b.proj_io = (L * E + L * (d * p_atb)) * bytes;
    b.weights = (4 * E * E + 2 * E * cfg.dff) * bytes;
    return b;
}

Count buffer_footprint(const TransformerConfig& cfg, Count p_atb, ParallelMode mode) {
    return mha_buffer_breakdown(cfg, mode == ParallelMode::Serial ? 1 : p_atb).total();
}

Count ffn_buffer_footprint(const TransformerConfig& cfg) {
    const Count L = cfg.seq_len;
    const Count E = cfg.embed_dim;
    return (2 * E * cfg.dff + L * E + L * cfg.dff + L * E) * cfg.bytes_per_element();
}

PlanDecision decide_parallel_mode(Stage stage, const TransformerConfig& cfg,
                                  const PlatformProfile& p, const PuCatalog& catalog, Count p_atb,
                                  Factor1Formula formula) {
    PlanDecision d;
    d.stage = stage;
    d.formula = formula;
    d.factor1_worked = compute_factor1(stage, cfg, p, catalog, Factor1Formula::WorkedValue);
    d.factor1_strict = compute_factor1(stage, cfg, p, catalog, Factor1Formula::Strict);
    d.factor1 = formula == Factor1Formula::WorkedValue ? d.factor1_worked : d.factor1_strict;
    d.factor2_bytes = stage == Stage::Mha
                          ? buffer_footprint(cfg, p_atb, ParallelMode::FullyPipelined)
                          : ffn_buffer_footprint(cfg);
    d.total_buffer_bytes = p.total_buffer_bytes;
    d.max_pipeline_depth = max_pipeline_depth(stage);

    const bool scale = d.factor1 >= static_cast<double>(d.max_pipeline_depth);
    const bool buffer = d.factor2_bytes > p.total_buffer_bytes;
    d.triggered_by = scale && buffer ? Trigger::Both
                     : scale         ? Trigger::Factor1
                     : buffer        ? Trigger::Factor2
                                     : Trigger::None;
    d.chosen = (scale || buffer) ? ParallelMode::HybridSerialAtbParallel
                                 : ParallelMode::FullyPipelined;
    return d;
}

Count decide_p_atb(const AtbRatio& r) {
    if (r.atb_input_heads <= 0) throw PlanningError("ATB input heads must be positive");
    if (r.qkv_output_heads > 0 && r.qkv_output_heads % r.atb_input_heads == 0) {
        return std::max<Count>(1, r.qkv_output_heads / r.atb_input_heads);
    }
    if (!(r.throughput_atb > 0.0)) throw PlanningError("ATB throughput must be positive");
    return std::max<Count>(1, std::llround(r.throughput_qkv / r.throughput_atb));
}

AtbRatio atb_ratio(const TransformerConfig& cfg, const PuCatalog& catalog) {
    const PuSpec& lb = catalog.largest();
    AtbRatio r;
    r.qkv_output_heads = lb.extent_n();
    r.atb_input_heads = cfg.head_dim();
    // Both sides measured over one LB block time: the LB emits extent_n / d
    // heads while a balanced ATB consumes one.
    r.throughput_qkv = static_cast<double>(lb.extent_n()) / static_cast<double>(cfg.head_dim());
    r.throughput_atb = 1.0;
    return r;
}

LayerDims layer_dims(const Workload& w) {
    const MatMulSpec* qkv = w.find(MmRole::QkvLB);
    const MatMulSpec* pre = w.find(MmRole::AtbQKt);
    const MatMulSpec* ffn1 = w.find(MmRole::Ffn1LB);
    if (!qkv || !pre || !ffn1 || !w.find(MmRole::AtbAV) || !w.find(MmRole::ProjLB) ||
        !w.find(MmRole::Ffn2LB)) {
        throw PlanningError("workload is missing a matmul role");
    }
    LayerDims d;
    d.seq_len = pre->m;
    d.head_dim = pre->k;
    d.embed_dim = qkv->k;
    d.dff = ffn1->n;
    d.heads = pre->count;
    d.independent_linear = w.independent_linear;
    return d;
}

MatMulSpec qkv_block_mm(const LayerDims& d, Count heads) {
    if (d.independent_linear) {
        return {d.seq_len, d.embed_dim, d.head_dim * heads, 1, Stage::Mha, MmRole::QkvLB};
    }
    return {d.seq_len, d.embed_dim, d.head_dim, heads, Stage::Mha, MmRole::QkvLB};
}

MatMulSpec proj_block_mm(const LayerDims& d, Count heads) {
    return {d.seq_len, d.head_dim * heads, d.embed_dim, 1, Stage::Mha, MmRole::ProjLB};
}

MatMulSpec atb_pre_mm(const LayerDims& d) {
    return {d.seq_len, d.head_dim, d.seq_len, 1, Stage::Mha, MmRole::AtbQKt};
}

MatMulSpec atb_post_mm(const LayerDims& d) {
    return {d.seq_len, d.seq_len, d.head_dim, 1, Stage::Mha, MmRole::AtbAV};
}

double group_time(const MatMulSpec& mm, const PuSpec& spec, Count count, const PlatformProfile& p) {
    return static_cast<double>(invocation_rounds(tile_mm(mm, spec), count) * mm.count) *
           pu_invocation_time(spec, p);
}

const PuSpec* EdpuPlan::spec(PuKind kind) const {
    for (const auto& s : pu_specs) {
        if (s.kind == kind) return &s;
    }
    return nullptr;
}

const PuInstance* EdpuPlan::instance(const std::string& id) const {
    for (const auto& i : instances) {
        if (i.id == id) return &i;
    }
    return nullptr;
}

Count EdpuPlan::cores_of(const PrgNode& prg) const {
    Count cores = 0;
    for (const auto& id : prg.pu_instances) {
        const PuInstance* inst = instance(id);
        const PuSpec* s = inst ? spec(inst->kind) : nullptr;
        if (s) cores += s->core_count;
    }
    return cores;
}

namespace {

struct GroupChoice {
    const PuSpec* spec = nullptr;
    Count count = 0;
    double time_ns = 0.0;
    Count cores() const { return spec->core_count * count; }
};

// Core-minimal PU group that keeps up with `target_ns`; if none fits the
// budget, the fastest group that does. Ties prefer fewer, larger PUs.
std::optional<GroupChoice> choose_group(const MatMulSpec& mm, double target_ns, Count budget,
                                        const PuCatalog& catalog, const PlatformProfile& p) {
    std::optional<GroupChoice> best_fit;
    std::optional<GroupChoice> fastest;
    for (const auto& spec : catalog.specs) {
        const Count useful = tile_mm(mm, spec).output_tiles();
        for (Count count = 1; count <= useful && count * spec.core_count <= budget; ++count) {
            GroupChoice c{&spec, count, group_time(mm, spec, count, p)};
            if (c.time_ns <= target_ns) {
                if (!best_fit || c.cores() < best_fit->cores() ||
                    (c.cores() == best_fit->cores() && c.count < best_fit->count)) {
                    best_fit = c;
                }
            }
            if (!fastest || c.time_ns < fastest->time_ns ||
                (c.time_ns == fastest->time_ns && c.cores() < fastest->cores())) {
                fastest = c;
            }
        }
    }
    return best_fit ? best_fit : fastest;
}

class InstancePool {
public:
    std::vector<std::string> add(PuKind kind, Count n) {
        std::vector<std::string> ids;
        for (Count i = 0; i < n; ++i) {
            std::string id = std::string(to_string(kind)) + "." + std::to_string(next_[kind]++);
            instances_.push_back({id, kind});
            ids.push_back(std::move(id));
        }
        return ids;
    }
    std::vector<PuInstance> take() { return std::move(instances_); }

private:
    std::map<PuKind, Count> next_;
    std::vector<PuInstance> instances_;
};

std::vector<std::vector<std::string>> split_even(const std::vector<std::string>& ids, Count parts) {
    std::vector<std::vector<std::string>> out(parts);
    const Count n = static_cast<Count>(ids.size());
    Count at = 0;
    for (Count i = 0; i < parts; ++i) {
        const Count take = n / parts + (i < n % parts ? 1 : 0);
        for (Count j = 0; j < take; ++j) out[i].push_back(ids[at++]);
    }
    return out;
}

Count heads_of_lane(Count heads, Count lanes, Count lane) {
    return heads / lanes + (lane < heads % lanes ? 1 : 0);
}

struct MhaLayout {
    ParallelMode mode;
    std::vector<PrgNode> prgs;
    std::vector<std::string> lb_instances;  // shared with the FFN stage
};

std::vector<PrgNode> mha_prgs(const TransformerConfig& cfg, const LayerDims& dims, Count lanes,
                              const std::vector<std::string>& q, const std::vector<std::string>& k,
                              const std::vector<std::string>& v,
                              const std::vector<std::vector<std::string>>& pre,
                              const std::vector<std::vector<std::string>>& post,
                              const std::vector<std::string>& proj, PuKind lb_kind,
                              PuKind pre_kind, PuKind post_kind) {
    const Count bytes = cfg.bytes_per_element();
    const Count L = dims.seq_len;
    const Count E = dims.embed_dim;
    const Count d = dims.head_dim;
    const MatMulSpec qkv_mm = dims.independent_linear
                                  ? MatMulSpec{L, E, E, 1, Stage::Mha, MmRole::QkvLB}
                                  : MatMulSpec{L, E, d, dims.heads, Stage::Mha, MmRole::QkvLB};
    std::vector<PrgNode> prgs;
    const char* names[] = {"Q_LB", "K_LB", "V_LB"};
    const std::vector<std::string>* groups[] = {&q, &k, &v};
    for (int i = 0; i < 3; ++i) {
        prgs.push_back({names[i], PrgKind::QkvLB, Stage::Mha, {qkv_mm}, lb_kind, *groups[i],
                        {{"out", L * d * lanes * bytes}, {"weights", E * E * bytes}}});
    }
    for (Count a = 0; a < lanes; ++a) {
        const Count heads = heads_of_lane(dims.heads, lanes, a);
        MatMulSpec pre_mm = atb_pre_mm(dims);
        pre_mm.count = heads;
        MatMulSpec post_mm = atb_post_mm(dims);
        post_mm.count = heads;
        const std::string atb = "ATB" + std::to_string(a);
        const Count attention = (L * L) / 2;
        prgs.push_back({atb + "_pre", PrgKind::AtbPre, Stage::Mha, {pre_mm}, pre_kind, pre[a],
                        {{"qk_in", 2 * L * d * bytes}, {"attention", attention * bytes}}});
        prgs.push_back({atb + "_post", PrgKind::AtbPost, Stage::Mha, {post_mm}, post_kind, post[a],
                        {{"v_in", L * d * bytes}, {"out", L * d * bytes}}});
    }
    prgs.push_back({"Proj_LB", PrgKind::ProjLB, Stage::Mha,
                    {MatMulSpec{L, E, E, 1, Stage::Mha, MmRole::ProjLB}}, lb_kind, proj,
                    {{"io", (L * E + L * d * lanes) * bytes}, {"weights", E * E * bytes}}});
    return prgs;
}

std::optional<MhaLayout> pipelined_mha(const TransformerConfig& cfg, const LayerDims& dims,
                                       Count p_atb, const PlatformProfile& p,
                                       const PuCatalog& catalog, InstancePool& pool,
                                       std::vector<std::string>& notes) {
    const PuSpec& lb = catalog.largest();
    const Count lb_cores = 4 * lb.core_count;
    const double target = std::max(group_time(qkv_block_mm(dims, p_atb), lb, 1, p),
                                   group_time(proj_block_mm(dims, p_atb), lb, 1, p));
    const Count remaining = p.total_aie - lb_cores;
    if (remaining <= 0) {
        notes.push_back("FullyPipelined MHA needs more than " + std::to_string(lb_cores) +
                        " cores for its 4 LB PRGs (total_aie=" + std::to_string(p.total_aie) +
                        "); falling back to HybridSerialAtbParallel");
        return std::nullopt;
    }
    const Count per_atb = remaining / p_atb;
    const auto pre = choose_group(atb_pre_mm(dims), target, per_atb, catalog, p);
    const auto post = pre ? choose_group(atb_post_mm(dims), target, per_atb - pre->cores(), catalog, p)
                          : std::nullopt;
    if (!pre || !post) {
        notes.push_back("FullyPipelined MHA: " + std::to_string(per_atb) +
                        " cores per ATB cannot host both ATB PRGs; falling back to "
                        "HybridSerialAtbParallel");
        return std::nullopt;
    }

    MhaLayout layout{ParallelMode::FullyPipelined, {}, {}};
    const auto q = pool.add(lb.kind, 1);
    const auto k = pool.add(lb.kind, 1);
    const auto v = pool.add(lb.kind, 1);
    const auto proj = pool.add(lb.kind, 1);
    std::vector<std::vector<std::string>> pre_groups, post_groups;
    for (Count a = 0; a < p_atb; ++a) {
        pre_groups.push_back(pool.add(pre->spec->kind, pre->count));
        post_groups.push_back(pool.add(post->spec->kind, post->count));
    }
    layout.prgs = mha_prgs(cfg, dims, p_atb, q, k, v, pre_groups, post_groups, proj, lb.kind,
                           pre->spec->kind, post->spec->kind);
    layout.lb_instances = {q[0], k[0], v[0], proj[0]};
    return layout;
}

// The PU kind deploying the most cores within total_aie; ties go to the larger PU.
std::pair<const PuSpec*, Count> maximal_set(const PuCatalog& catalog, Count total_aie) {
    const PuSpec* best = nullptr;
    Count best_n = 0;
    for (const auto& spec : catalog.specs) {
        const Count n = total_aie / spec.core_count;
        if (n == 0) continue;
        if (!best || n * spec.core_count > best_n * best->core_count ||
            (n * spec.core_count == best_n * best->core_count && spec.core_count > best->core_count)) {
            best = &spec;
            best_n = n;
        }
    }
    return {best, best_n};
}

MhaLayout shared_mha(const TransformerConfig& cfg, const LayerDims& dims, Count p_atb,
                     ParallelMode mode, const PlatformProfile& p, const PuCatalog& catalog,
                     InstancePool& pool, std::vector<std::string>& notes) {
    const auto [spec, n] = maximal_set(catalog, p.total_aie);
    if (!spec) {
        Count smallest = std::numeric_limits<Count>::max();
        for (const auto& s : catalog.specs) smallest = std::min(smallest, s.core_count);
        throw PlanningError("infeasible: total_aie=" + std::to_string(p.total_aie) +
                            " is smaller than the smallest PU (" + std::to_string(smallest) +
                            " cores)");
    }
    const auto ids = pool.add(spec->kind, n);
    const Count lanes = mode == ParallelMode::Serial ? 1 : std::min(p_atb, n);
    if (lanes < p_atb && mode != ParallelMode::Serial) {
        notes.push_back("ATB lanes limited to " + std::to_string(lanes) + " by " +
                        std::to_string(n) + " shared " + spec->name() + " PU instance(s)");
    }
    const auto parts = split_even(ids, lanes);
    MhaLayout layout{mode, {}, ids};
    layout.prgs = mha_prgs(cfg, dims, lanes, ids, ids, ids, parts, parts, ids, spec->kind,
                           spec->kind, spec->kind);
    return layout;
}

std::vector<PrgNode> ffn_prgs(const TransformerConfig& cfg, const LayerDims& dims, PuKind kind,
                              const std::vector<std::string>& g1,
                              const std::vector<std::string>& g2) {
    const Count bytes = cfg.bytes_per_element();
    const Count L = dims.seq_len;
    const Count E = dims.embed_dim;
    const Count F = dims.dff;
    return {
        {"FFN1_LB", PrgKind::Ffn1LB, Stage::Ffn, {MatMulSpec{L, E, F, 1, Stage::Ffn, MmRole::Ffn1LB}},
         kind, g1, {{"in", L * E * bytes}, {"hidden", L * F * bytes}, {"weights", E * F * bytes}}},
        {"FFN2_LB", PrgKind::Ffn2LB, Stage::Ffn, {MatMulSpec{L, F, E, 1, Stage::Ffn, MmRole::Ffn2LB}},
         kind, g2, {{"out", L * E * bytes}, {"weights", E * F * bytes}}},
    };
}

}  // namespace

EdpuPlan allocate(const TransformerConfig& cfg, const Workload& w, const Decisions& decisions,
                  const PlatformProfile& p, const PuCatalog& catalog,
                  const AllocateOptions& options) {
    if (catalog.specs.empty()) throw PlanningError("infeasible: PU catalog is empty");
    if (w != derive_workload(cfg, w.independent_linear)) {
        throw PlanningError("workload does not match the model configuration "
                            "(decoder workloads are not supported by the planner)");
    }
    const LayerDims dims = layer_dims(w);
    const Count p_atb = std::clamp<Count>(decisions.p_atb, 1, dims.heads);

    EdpuPlan plan;
    plan.model = cfg;
    plan.total_aie = p.total_aie;
    plan.independent_linear = w.independent_linear;
    plan.p_atb = p_atb;
    plan.pu_specs = catalog.specs;
    plan.mha_decision = decisions.mha;
    plan.ffn_decision = decisions.ffn;
    plan.notes = catalog.warnings;
    plan.notes.push_back("Large PU: PLIO_AIE^2 bound applied per 2D (k-slice) core group; "
                         "PLIO routing follows a modeled A/B broadcast geometry");

    InstancePool pool;
    std::optional<MhaLayout> mha;
    if (decisions.mha.chosen == ParallelMode::FullyPipelined) {
        mha = pipelined_mha(cfg, dims, p_atb, p, catalog, pool, plan.notes);
        if (!mha) pool = InstancePool{};
    }
    if (!mha) {
        const ParallelMode mode = decisions.mha.chosen == ParallelMode::Serial
                                      ? ParallelMode::Serial
                                      : ParallelMode::HybridSerialAtbParallel;
        mha = shared_mha(cfg, dims, p_atb, mode, p, catalog, pool, plan.notes);
    }
    plan.pm_mha = mha->mode;
    plan.mha_prgs = std::move(mha->prgs);

    ParallelMode ffn_mode = decisions.ffn.chosen;
    if (options.force_pipelined_ffn && ffn_mode != ParallelMode::FullyPipelined) {
        plan.notes.push_back("FFN override: mode rule chose " + std::string(to_string(ffn_mode)) +
                             " (Factor1=" + std::to_string(decisions.ffn.factor1) +
                             "), FFN stage pipelined instead");
        ffn_mode = ParallelMode::FullyPipelined;
    }
    const auto& lb = mha->lb_instances;
    const PuKind lb_kind = plan.mha_prgs.front().pu_kind;
    if (ffn_mode == ParallelMode::FullyPipelined && lb.size() < 2) {
        plan.notes.push_back("pipelined FFN needs two LB PU instances; running FFN LBs serially");
        ffn_mode = ParallelMode::HybridSerialAtbParallel;
    }
    if (ffn_mode == ParallelMode::FullyPipelined) {
        const auto halves = split_even(lb, 2);
        plan.ffn_prgs = ffn_prgs(cfg, dims, lb_kind, halves[0], halves[1]);
    } else {
        plan.ffn_prgs = ffn_prgs(cfg, dims, lb_kind, lb, lb);
    }
    plan.pm_ffn = ffn_mode;

    plan.instances = pool.take();
    for (const auto& inst : plan.instances) plan.deployed_aie += plan.spec(inst.kind)->core_count;
    if (plan.deployed_aie > p.total_aie) {
        throw PlanningError("infeasible: deployed cores " + std::to_string(plan.deployed_aie) +
                            " exceed total_aie " + std::to_string(p.total_aie));
    }
    plan.deployment_rate =
        static_cast<double>(plan.deployed_aie) / static_cast<double>(p.total_aie);
    plan.buffer_footprint_bytes = buffer_footprint(cfg, p_atb, plan.pm_mha);
    return plan;
}

EdpuPlan design_edpu(const TransformerConfig& cfg, const PlatformProfile& p,
                     const DesignOptions& options) {
    cfg.validate();
    p.validate();
    const PlatformProfile ep = effective_profile(p, cfg);
    const Workload w = derive_workload(cfg, options.independent_linear);
    const PuCatalog catalog = enumerate_pu_specs(ep, cfg.data_bits);
    const Count p_atb = std::clamp<Count>(decide_p_atb(atb_ratio(cfg, catalog)), 1, cfg.head);
    const Factor1Formula formula =
        options.strict_factor1 ? Factor1Formula::Strict : Factor1Formula::WorkedValue;
    Decisions d{decide_parallel_mode(Stage::Mha, cfg, ep, catalog, p_atb, formula),
                decide_parallel_mode(Stage::Ffn, cfg, ep, catalog, p_atb, formula), p_atb};
    EdpuPlan plan = allocate(cfg, w, d, ep, catalog, {options.force_pipelined_ffn});
    plan.profile_name = p.name;
    return plan;
}

}  // namespace catdse
