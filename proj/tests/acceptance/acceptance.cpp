// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "catdse/codegen.hpp"
#include "catdse/planner.hpp"
#include "catdse/platform.hpp"
#include "catdse/pu_design.hpp"
#include "catdse/simulator.hpp"
#include "catdse/workload.hpp"

using namespace catdse;

namespace {

std::string slurp(const std::string& rel) {
    std::ifstream in(std::string(CATDSE_DATA_DIR) + "/" + rel, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

TransformerConfig model(const std::string& name) {
    return load_model_config(nlohmann::json::parse(slurp("models/" + name + ".json")));
}

struct Check {
    std::string detail;
    bool ok = true;
    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

struct Built {
    EdpuPlan plan;
    Workload w;
    PlatformProfile p;
};

Built build(const TransformerConfig& cfg, const DesignOptions& o = {}) {
    EdpuPlan plan = design_edpu(cfg, vck5000_default(), o);
    Workload w = derive_workload(cfg, plan.independent_linear);
    return {std::move(plan), std::move(w), effective_profile(vck5000_default(), cfg)};
}

SimReport run(const Built& b, Count batch, StageSelection st = StageSelection::Both) {
    SimConfig sc;
    sc.batch_size = batch;
    sc.stages = st;
    return simulate(b.plan, b.w, b.p, sc);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void workload_oracle(Check& c) {
    const Workload w = derive_workload(model("bert-base"), true);
    using Shape = std::tuple<Count, Count, Count>;
    std::map<Shape, Count> got;
    for (const auto& mm : w.mms) got[{mm.m, mm.k, mm.n}] += mm.count;
    const std::map<Shape, Count> want{{{256, 768, 768}, 4},
                                      {{256, 64, 256}, 12},
                                      {{256, 256, 64}, 12},
                                      {{256, 768, 3072}, 1},
                                      {{256, 3072, 768}, 1}};
    c.expect(got == want, "MM shape multiset differs");
    for (MmRole r : {MmRole::Ffn1LB, MmRole::Ffn2LB}) {
        const MatMulSpec* mm = w.find(r);
        c.expect(mm && mm->macs() == 256LL * 768 * 3072, "FFN MAC volume");
    }
    std::map<NonlinearKind, Count> nl;
    for (const auto& op : w.nonlinear) nl[op.kind] += op.count;
    c.expect(nl[NonlinearKind::Softmax] == 12, "softmax count " + std::to_string(nl[NonlinearKind::Softmax]));
    c.expect(nl[NonlinearKind::Transpose] == 12, "transpose count " + std::to_string(nl[NonlinearKind::Transpose]));
}

void count_formula(Check& c) {
    TransformerConfig cfg = model("bert-base");
    for (Count h = 1; h <= 64; ++h) {
        cfg.head = h;
        cfg.embed_dim = 64 * h;
        const Workload w = derive_workload(cfg, false);
        Count enumerated = 0;
        for (const auto& mm : w.mms) enumerated += mm.count;
        c.expect(mm_count(cfg, false) == 5 * h + 3, "mm_count at head " + std::to_string(h));
        c.expect(enumerated == 5 * h + 3, "enumeration at head " + std::to_string(h));
        c.expect(w.mm_instances() == enumerated, "mm_instances at head " + std::to_string(h));
    }
}

void mmsz_sizing(Check& c) {
    c.expect(max_mmsz(vck5000_default(), 8) == 64, "vck5000 Int8 size");
    std::mt19937_64 rng(3);
    const int bits[] = {8, 16, 32};
    for (int i = 0; i < 100; ++i) {
        const int b = bits[rng() % 3];
        PlatformProfile p = vck5000_default();
        p.m_window_bytes = 4 * (b / 8) + static_cast<Count>(rng() % (1LL << 22));
        Count best = 0;
        for (Count s = 1; s <= 1024; ++s)
            if ((s & (s - 1)) == 0 && s * s * (b / 8) * 4 <= p.m_window_bytes) best = s;
        c.expect(max_mmsz(p, b) == best, "window " + std::to_string(p.m_window_bytes) + " bits " + std::to_string(b));
    }
}

void plio_aie(Check& c) {
    c.expect(derive_plio_aie(vck5000_default()) == 4, "vck5000 PLIO_AIE");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> calc(1.0, 10000.0), window(1.0, 5000.0), grow(0.0, 3000.0);
    for (int i = 0; i < 1000; ++i) {
        PlatformProfile p = vck5000_default();
        p.t_calc_ns = calc(rng);
        p.t_window_ns = window(rng);
        const Count base = derive_plio_aie(p);
        PlatformProfile q = p;
        q.t_calc_ns += grow(rng);
        c.expect(derive_plio_aie(q) >= base, "not monotone in t_calc");
        q = p;
        q.t_window_ns += grow(rng);
        c.expect(derive_plio_aie(q) <= base, "not antitone in t_window");
    }
}

void factor1(Check& c) {
    const TransformerConfig cfg = model("bert-base");
    const PlatformProfile p = vck5000_default();
    const PuCatalog cat = enumerate_pu_specs(p, cfg.data_bits);
    const double worked = compute_factor1(Stage::Mha, cfg, p, cat);
    c.expect(worked == 1.5, "worked value " + num(worked));
    const double strict = compute_factor1(Stage::Mha, cfg, p, cat, Factor1Formula::Strict);
    c.detail = "strict formula " + num(strict);
}

void factor2(Check& c) {
    const TransformerConfig cfg = model("bert-base");
    const Count total = buffer_footprint(cfg, 4, ParallelMode::FullyPipelined);
    c.expect(total == 7'929'856, "footprint " + std::to_string(total));
    c.expect(mha_buffer_breakdown(cfg, 4).weights == 7'077'888, "weights component");
}

void p_atb(Check& c) {
    const TransformerConfig cfg = model("bert-base");
    const AtbRatio r = atb_ratio(cfg, enumerate_pu_specs(vck5000_default(), cfg.data_bits));
    c.expect(r.qkv_output_heads % r.atb_input_heads == 0, "head ratio not integral");
    c.expect(r.qkv_output_heads / r.atb_input_heads == 4, "head ratio");
    c.expect(decide_p_atb(r) == 4, "decide_p_atb");
}

void calibration(Check& c) {
    const Built b = build(model("bert-base"));
    const SimReport ffn = run(b, 1, StageSelection::FfnOnly);
    c.expect(ffn.ffn_ops == 2'415'919'104LL, "FFN ops " + std::to_string(ffn.ffn_ops));
    const double tops = static_cast<double>(ffn.ffn_ops) / ffn.ffn_latency_ns / 1e3;
    c.expect(std::abs(ffn.ffn_tops - tops) <= 1e-12 * tops, "FFN TOPS is not ops over latency");
    c.expect(std::abs(ffn.ffn_latency_ns - 81'000.0) <= 0.15 * 81'000.0, "FFN latency " + num(ffn.ffn_latency_ns) + " ns");
    for (const char* m : {"bert-base", "vit-base", "bert-base-limited"}) {
        const Built mb = build(model(m));
        for (Count batch : {1, 4, 16, 32}) {
            for (StageSelection st : {StageSelection::Both, StageSelection::MhaOnly, StageSelection::FfnOnly}) {
                const SimReport r = run(mb, batch, st);
                c.expect(r.gops_per_aie == r.tops * 1e3 / static_cast<double>(r.deployed_aie),
                         std::string("gops_per_aie identity for ") + m);
            }
        }
    }
    if (c.ok) c.detail = "FFN latency " + num(ffn.ffn_latency_ns / 1e6) + " ms";
}

void utilization_rates(Check& c) {
    const Built b = build(model("bert-base"));
    const Utilization u = utilization(run(b, 16), b.plan);
    c.expect(b.plan.deployed_aie == 352 && b.plan.total_aie == 400, "deployed " + std::to_string(b.plan.deployed_aie));
    c.expect(u.deployment_rate == 0.88, "deployment rate " + num(u.deployment_rate));
    c.expect(u.eff_util_mha == 1.0, "MHA rate " + num(u.eff_util_mha));
    c.expect(std::abs(u.eff_util_ffn - 256.0 / 352.0) < 1e-12, "FFN rate " + num(u.eff_util_ffn));
    c.expect(std::abs(u.eff_util_ffn - 0.73) <= 0.005, "FFN rate off 73%");
    c.expect(std::abs(u.avg_simple - 0.87) <= 0.02, "average " + num(u.avg_simple));
    const Built lim = build(model("bert-base-limited"));
    const Utilization ul = utilization(run(lim, 16), lim.plan);
    c.expect(ul.deployment_rate == 1.0 && ul.eff_util_mha == 1.0 && ul.eff_util_ffn == 1.0 && ul.avg_simple == 1.0,
             "limited-AIE rates not all 1.00");
    if (c.ok) c.detail = "avg " + num(u.avg_simple) + ", weighted " + num(u.avg_weighted);
}

void mode_ordering(Check& c) {
    const ModeComparison mc = compare_modes(model("vit-base"), vck5000_default());
    c.expect(mc.rows.size() == 5, "row count");
    if (mc.rows.size() != 5) return;
    std::vector<double> s;
    for (const auto& r : mc.rows) s.push_back(mc.rows[0].latency_ns / r.latency_ns);
    for (int i = 1; i < 5; ++i) c.expect(s[i] > s[i - 1], "Lab" + std::to_string(i + 1) + " not faster than Lab" + std::to_string(i));
    c.expect(s[3] >= 8.0 && s[3] <= 22.0, "Lab4/Lab1 " + num(s[3]));
    c.expect(s[4] >= 12.0 && s[4] <= 30.0, "Lab5/Lab1 " + num(s[4]));
    if (c.ok) c.detail = "speedups " + num(s[1]) + " " + num(s[2]) + " " + num(s[3]) + " " + num(s[4]);
}

void batch_saturation(Check& c) {
    std::vector<Count> batches;
    for (Count b = 1; b <= 32; ++b) batches.push_back(b);
    for (const char* m : {"bert-base", "vit-base", "bert-base-limited"}) {
        const Built b = build(model(m));
        const auto pts = sweep_batch(b.plan, b.w, b.p, batches);
        for (std::size_t i = 1; i < pts.size(); ++i)
            c.expect(pts[i].tops >= pts[i - 1].tops, std::string(m) + " drops at batch " + std::to_string(pts[i].batch));
        const double gain = pts[31].tops / pts[15].tops - 1.0;
        c.expect(gain < 0.05, std::string(m) + " gains " + num(100 * gain) + "% from 16 to 32");
    }
}

void codegen_determinism(Check& c) {
    const Built bert = build(model("bert-base"));
    const GraphDescription g1 = emit_graph(bert.plan, bert.p);
    const GraphDescription g2 = emit_graph(build(model("bert-base")).plan, bert.p);
    c.expect(to_text(g1) == to_text(g2) && to_json(g1) == to_json(g2), "two emissions differ");
    c.expect(to_text(g1) == slurp("tests/golden/bert-base.graph"), "bert-base golden text");
    const Built lim = build(model("bert-base-limited"));
    c.expect(to_json(emit_graph(lim.plan, lim.p)).dump(2) + "\n" == slurp("tests/golden/bert-base-limited.graph.json"),
             "limited golden json");
    c.expect(g1.kernels.size() == 352, "kernel count " + std::to_string(g1.kernels.size()));
    std::mt19937_64 rng(12);
    for (int i = 0; i < 500 && c.ok; ++i) {
        const Count head = 1 + static_cast<Count>(rng() % 16);
        TransformerConfig cfg{head, head * 64, 64 * (1 + static_cast<Count>(rng() % 64)), 32 + static_cast<Count>(rng() % 512)};
        cfg.allowable_aie = 4 + static_cast<Count>(rng() % 500);
        const PlatformProfile ep = effective_profile(vck5000_default(), cfg);
        const EdpuPlan plan = design_edpu(cfg, vck5000_default(), {rng() % 2 == 0, false, rng() % 2 == 0});
        const GraphDescription g = emit_graph(plan, ep);
        const GraphValidation v = validate_graph(g, ep);
        c.expect(v.ok, "random plan " + std::to_string(i) + ": " + (v.violations.empty() ? "" : v.violations.front()));
        c.expect(static_cast<Count>(g.kernels.size()) == plan.deployed_aie, "random plan " + std::to_string(i) + " kernels");
    }
}

Count pow2_floor(Count v) {
    Count r = 1;
    while (r * 2 <= v) r *= 2;
    return r;
}

void decision_rule(Check& c) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000; ++i) {
        const Count head = 1 + static_cast<Count>(rng() % 16);
        const Count d = 8 * (1 + static_cast<Count>(rng() % 16));
        TransformerConfig cfg{head, head * d, 64 * (1 + static_cast<Count>(rng() % 64)), 16 + static_cast<Count>(rng() % 1024)};
        cfg.data_bits = (rng() % 2) ? 8 : 16;
        PlatformProfile p = vck5000_default();
        p.total_aie = 64 + static_cast<Count>(rng() % 800);
        p.total_buffer_bytes = 1'000'000 + static_cast<Count>(rng() % 30'000'000);
        p.m_window_bytes = 4096LL << (rng() % 4);
        p.t_window_ns = 500.0 + static_cast<double>(rng() % 1000);
        p.t_calc_ns = p.t_window_ns * (4.0 + static_cast<double>(rng() % 5));
        const PuCatalog cat = enumerate_pu_specs(p, cfg.data_bits);
        const Count pa = 1 + static_cast<Count>(rng() % 4);

        const Count bytes = cfg.data_bits / 8;
        const Count mmsz = pow2_floor(static_cast<Count>(std::sqrt(static_cast<double>(p.m_window_bytes / (4 * bytes)))));
        const Count plio = static_cast<Count>(p.t_calc_ns / p.t_window_ns);
        const double side = static_cast<double>(plio * mmsz);
        const Count n_max = p.total_aie / 64;
        const Count L = cfg.seq_len, E = cfg.embed_dim, hd = cfg.head_dim();
        for (Stage st : {Stage::Mha, Stage::Ffn}) {
            const double f1 = static_cast<double>(L) * E * (st == Stage::Mha ? E : cfg.dff) /
                              (static_cast<double>(n_max) * side * side * side);
            const Count f2 = st == Stage::Mha
                                 ? (3 * L * hd * pa + 4 * L * hd * pa + L * L * pa / 2 + L * E + L * hd * pa +
                                    4 * E * E + 2 * E * cfg.dff) * bytes
                                 : (2 * E * cfg.dff + 2 * L * E + L * cfg.dff) * bytes;
            const bool hybrid = f1 >= static_cast<double>(st == Stage::Mha ? 4 : 2) || f2 > p.total_buffer_bytes;
            const PlanDecision got = decide_parallel_mode(st, cfg, p, cat, pa);
            c.expect((got.chosen == ParallelMode::HybridSerialAtbParallel) == hybrid, "sample " + std::to_string(i));
            c.expect(got.factor2_bytes == f2, "sample " + std::to_string(i) + " Factor2");
        }
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"workload_oracle", workload_oracle},
        {"mm_count_formula", count_formula},
        {"mmsz_sizing", mmsz_sizing},
        {"plio_aie", plio_aie},
        {"factor1", factor1},
        {"factor2", factor2},
        {"p_atb", p_atb},
        {"ffn_calibration_and_identity", calibration},
        {"utilization_rates", utilization_rates},
        {"mode_comparison_ordering", mode_ordering},
        {"batch_saturation", batch_saturation},
        {"codegen_determinism", codegen_determinism},
        {"decision_rule_property", decision_rule},
    };
    int failures = 0;
    int n = 0;
    for (const auto& [name, fn] : criteria) {
        ++n;
        Check c;
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        if (!c.ok) ++failures;
        std::printf("%s %2d %s%s%s\n", c.ok ? "PASS" : "FAIL", n, name.c_str(), c.detail.empty() ? "" : "  ", c.detail.c_str());
    }
    return failures;
}
