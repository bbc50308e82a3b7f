#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"
#include "catdse/simulator.hpp"
#include "helpers.hpp"

using namespace catdse;

namespace {

struct Case {
    TransformerConfig cfg;
    PlatformProfile p;
    EdpuPlan plan;
    Workload w;
};

Case make(const TransformerConfig& cfg, const DesignOptions& o = {}) {
    const PlatformProfile p = effective_profile(vck5000_default(), cfg);
    EdpuPlan plan = design_edpu(cfg, vck5000_default(), o);
    return {cfg, p, plan, derive_workload(cfg, plan.independent_linear)};
}

SimReport run(const Case& c, Count batch, StageSelection st = StageSelection::Both, bool timeline = false) {
    SimConfig sc;
    sc.batch_size = batch;
    sc.stages = st;
    sc.record_timeline = timeline;
    return simulate(c.plan, c.w, c.p, sc);
}

}  // namespace

TEST(Simulator, BertFfnCalibration) {
    const Case c = make(testutil::bert());
    const SimReport r = run(c, 1);
    const double T = c.p.t_calc_ns;
    EXPECT_DOUBLE_EQ(r.ffn_latency_ns, 23 * T);  // 9 + 12 rounds + Gelu + LayernormAdd
    EXPECT_NEAR(r.ffn_latency_ns, 81'000.0, 0.15 * 81'000.0);
    EXPECT_EQ(r.ffn_ops, 2'415'919'104LL);
    EXPECT_DOUBLE_EQ(r.ffn_tops, 2'415'919'104.0 / r.ffn_latency_ns / 1e3);
}

TEST(Simulator, BertMhaPipelineRecurrence) {
    const Case c = make(testutil::bert());
    const double T = c.p.t_calc_ns;
    for (Count b : {1, 2, 4, 16}) {
        // 3 blocks of 4 heads per item, 3T bottleneck, 3T of nonlinear depth.
        EXPECT_DOUBLE_EQ(run(c, b).mha_latency_ns, static_cast<double>(10 + 9 * b) * T) << b;
    }
}

TEST(Simulator, LimitedSerialLatency) {
    const Case c = make(testutil::limited());
    const double T = c.p.t_calc_ns;
    for (Count b : {1, 3}) {
        const SimReport r = run(c, b);
        EXPECT_DOUBLE_EQ(r.mha_latency_ns, static_cast<double>(85 * b) * T);
        EXPECT_DOUBLE_EQ(r.ffn_latency_ns, static_cast<double>(74 * b) * T);
    }
}

TEST(Simulator, Utilization) {
    const SimReport r = run(make(testutil::bert()), 16);
    EXPECT_DOUBLE_EQ(r.deployment_rate, 0.88);
    EXPECT_DOUBLE_EQ(r.eff_util_mha, 1.0);
    EXPECT_DOUBLE_EQ(r.eff_util_ffn, 256.0 / 352.0);
    EXPECT_NEAR(r.eff_util_avg, 0.87, 0.02);
    EXPECT_GT(r.eff_util_weighted, 0.0);
    EXPECT_LT(r.eff_util_weighted, 1.0);

    const Case lim = make(testutil::limited());
    const SimReport l = run(lim, 16);
    const Utilization u = utilization(l, lim.plan);
    EXPECT_DOUBLE_EQ(u.deployment_rate, 1.0);
    EXPECT_DOUBLE_EQ(u.eff_util_mha, 1.0);
    EXPECT_DOUBLE_EQ(u.eff_util_ffn, 1.0);
    EXPECT_DOUBLE_EQ(u.avg_simple, 1.0);
    EXPECT_DOUBLE_EQ(u.avg_weighted, 1.0);
}

TEST(Simulator, SingleStageAverages) {
    const Case c = make(testutil::bert());
    const SimReport m = run(c, 4, StageSelection::MhaOnly);
    EXPECT_EQ(m.eff_util_avg, m.eff_util_mha);
    EXPECT_EQ(m.ffn_latency_ns, 0.0);
    EXPECT_EQ(m.total_latency_ns, m.mha_latency_ns);
    const SimReport f = run(c, 4, StageSelection::FfnOnly);
    EXPECT_EQ(f.eff_util_avg, f.eff_util_ffn);
    EXPECT_EQ(f.ffn_latency_ns, run(c, 4).ffn_latency_ns);
}

TEST(Simulator, Identities) {
    for (const auto& cfg : {testutil::bert(), testutil::vit(), testutil::limited()}) {
        const Case c = make(cfg);
        for (Count b : {1, 7, 16}) {
            const SimReport r = run(c, b);
            EXPECT_EQ(r.total_latency_ns, r.mha_latency_ns + r.ffn_latency_ns);
            EXPECT_EQ(r.ops, total_ops(c.w) * b);
            EXPECT_DOUBLE_EQ(r.tops, static_cast<double>(r.ops) / r.total_latency_ns / 1e3);
            EXPECT_NEAR(r.gops_per_aie * static_cast<double>(r.deployed_aie), r.tops * 1e3, 1e-12 * r.tops * 1e3);
        }
    }
}

TEST(Simulator, Conservation) {
    for (const auto& cfg : {testutil::bert(), testutil::limited()}) {
        const Case c = make(cfg);
        const SimReport r = run(c, 8);
        ASSERT_FALSE(r.pu_busy_ns.empty());
        for (const auto& [id, busy] : r.pu_busy_ns) {
            EXPECT_LE(busy, r.total_latency_ns) << id;
            EXPECT_NE(c.plan.instance(id), nullptr) << id;
        }
        EXPECT_LE(r.busy_ratio_mha, 1.0);
        EXPECT_LE(r.busy_ratio_ffn, 1.0);
    }
}

TEST(Simulator, PipelineBoundAndSerialSum) {
    const Case c = make(testutil::bert());
    const SimReport r = run(c, 4, StageSelection::MhaOnly, true);
    std::map<std::string, double> prg_busy;
    std::map<std::pair<std::string, std::string>, double> open;
    for (const auto& e : r.timeline) {
        if (e.kind == EventKind::InvocationStart) open[{e.prg_id, e.pu_instance}] = e.time_ns;
        if (e.kind == EventKind::InvocationEnd) {
            const double span = e.time_ns - open[{e.prg_id, e.pu_instance}];
            prg_busy[e.prg_id + "/" + e.pu_instance] += span;
        }
    }
    for (const auto& [k, busy] : prg_busy) EXPECT_LE(busy, r.mha_latency_ns) << k;

    const Case lim = make(testutil::limited());
    const SimReport s = run(lim, 2, StageSelection::Both);
    const double busy = s.pu_busy_ns.at("Large.0");
    const double fills = static_cast<double>(2 * (12 * 2 + 1 + 2)) * lim.p.t_calc_ns;
    EXPECT_DOUBLE_EQ(s.total_latency_ns, busy + fills);
}

TEST(Simulator, BatchScaling) {
    for (const auto& cfg : {testutil::bert(), testutil::vit(), testutil::limited()}) {
        const Case c = make(cfg);
        EXPECT_GE(run(c, 16).tops, run(c, 1).tops);
    }
}

TEST(Simulator, SweepSaturates) {
    std::vector<Count> batches;
    for (Count b = 1; b <= 32; ++b) batches.push_back(b);
    for (const auto& cfg : {testutil::bert(), testutil::vit(), testutil::limited()}) {
        const Case c = make(cfg);
        const auto pts = sweep_batch(c.plan, c.w, c.p, batches);
        ASSERT_EQ(pts.size(), 32u);
        for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GE(pts[i].tops, pts[i - 1].tops * (1 - 1e-12));
        EXPECT_LT(pts[31].tops - pts[15].tops, 0.05 * pts[15].tops);
    }
}

TEST(Simulator, SerialCurveIsFlat) {
    const Case c = make(testutil::limited());
    const auto pts = sweep_batch(c.plan, c.w, c.p, {1, 2, 8, 32});
    for (const auto& pt : pts) EXPECT_NEAR(pt.tops, pts.front().tops, 1e-12 * pts.front().tops);
}

TEST(Simulator, SweepSinglePointMatchesSimulate) {
    const Case c = make(testutil::bert());
    const auto pts = sweep_batch(c.plan, c.w, c.p, {1});
    ASSERT_EQ(pts.size(), 1u);
    const SimReport r = run(c, 1);
    EXPECT_EQ(pts[0].tops, r.tops);
    EXPECT_EQ(pts[0].latency_ns, r.total_latency_ns);
    EXPECT_THROW(sweep_batch(c.plan, c.w, c.p, {}), SimulationError);
}

TEST(Simulator, Deterministic) {
    const Case c = make(testutil::bert());
    const SimReport a = run(c, 3, StageSelection::Both, true);
    const SimReport b = run(c, 3, StageSelection::Both, true);
    EXPECT_EQ(a.timeline, b.timeline);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(timeline_csv(a), timeline_csv(b));
    EXPECT_TRUE(std::is_sorted(a.timeline.begin(), a.timeline.end(), [](const SimEvent& x, const SimEvent& y) {
        return std::tie(x.time_ns, x.prg_id, x.kind, x.pu_instance) < std::tie(y.time_ns, y.prg_id, y.kind, y.pu_instance);
    }));
    EXPECT_EQ(std::count_if(a.timeline.begin(), a.timeline.end(), [](const SimEvent& e) { return e.kind == EventKind::BatchEnd; }), 3);
    EXPECT_EQ(timeline_csv(a).rfind("time_ns,prg,kind,pu\n", 0), 0u);
}

TEST(Simulator, ReportJsonSchema) {
    const nlohmann::json j = to_json(run(make(testutil::bert()), 2));
    for (const char* k : {"mha", "ffn", "total"}) EXPECT_TRUE(j["latency_ns"].contains(k));
    for (const char* k : {"mha", "ffn", "avg_simple", "avg_weighted"}) EXPECT_TRUE(j["eff_util"].contains(k));
    EXPECT_TRUE(j.contains("tops"));
    EXPECT_TRUE(j.contains("gops_per_aie"));
    EXPECT_TRUE(j.contains("deployment_rate"));
    EXPECT_FALSE(j["assumptions"].empty());
}

TEST(Simulator, MismatchNamesPrg) {
    const Case c = make(testutil::bert());
    const Workload other = derive_workload(testutil::vit(), true);
    try {
        simulate(c.plan, other, c.p, {});
        FAIL() << "expected SimulationError";
    } catch (const SimulationError& e) {
        EXPECT_NE(std::string(e.what()).find("PRG Q_LB"), std::string::npos) << e.what();
    }
    EXPECT_THROW(simulate(c.plan, derive_workload(testutil::bert(), false), c.p, {}), SimulationError);
    SimConfig bad;
    bad.batch_size = 0;
    EXPECT_THROW(simulate(c.plan, c.w, c.p, bad), SimulationError);
}

TEST(Simulator, PerHeadLinearPlans) {
    const Case c = make(testutil::bert(), {false, false, false});
    const SimReport r = run(c, 4);
    EXPECT_EQ(r.ops, total_ops(c.w) * 4);
    EXPECT_GT(r.tops, 0.0);
}

TEST(Simulator, ForcedPipelinedFfn) {
    const Case c = make(testutil::bert(), {true, false, true});
    const SimReport r = run(c, 4);
    EXPECT_EQ(r.ffn_ops, 4 * 2'415'919'104LL);
    EXPECT_DOUBLE_EQ(r.eff_util_ffn, 256.0 / 352.0);
}

TEST(Simulator, FillConstantIsConfigurable) {
    const Case c = make(testutil::bert());
    SimConfig sc;
    sc.nonlinear_fill_invocations = 0;
    EXPECT_DOUBLE_EQ(simulate(c.plan, c.w, c.p, sc).ffn_latency_ns, 21 * c.p.t_calc_ns);
}

TEST(CompareModes, OrderingAndBands) {
    const ModeComparison m = compare_modes(testutil::vit(), vck5000_default());
    ASSERT_EQ(m.rows.size(), 5u);
    EXPECT_EQ(m.pu_instances, 25);
    EXPECT_EQ(m.rows[0].speedup, 1.0);
    for (int i = 1; i < 5; ++i) EXPECT_GT(m.rows[i].speedup, m.rows[i - 1].speedup) << "Lab" << i + 1;
    EXPECT_GE(m.rows[3].speedup, 8.0);
    EXPECT_LE(m.rows[3].speedup, 22.0);
    EXPECT_GE(m.rows[4].speedup, 12.0);
    EXPECT_LE(m.rows[4].speedup, 30.0);
    EXPECT_LE(m.rows[3].speedup / m.rows[1].speedup, 4.0);
    EXPECT_TRUE(m.rows[2].independent_linear);
    EXPECT_TRUE(m.rows[4].independent_linear);
    EXPECT_EQ(m.rows[3].atb_parallelism, 4);
}

TEST(CompareModes, NeedsEnoughPus) {
    PlatformProfile p = vck5000_default();
    p.total_aie = 64;
    EXPECT_THROW(compare_modes(testutil::vit(), p), PlanningError);
}
