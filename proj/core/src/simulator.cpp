#include "catdse/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"

namespace catdse {

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::InvocationStart: return "InvocationStart";
        case EventKind::InvocationEnd: return "InvocationEnd";
        case EventKind::StageStart: return "StageStart";
        case EventKind::StageEnd: return "StageEnd";
        case EventKind::BatchEnd: return "BatchEnd";
    }
    return "?";
}

namespace {

// PL nonlinear operators streaming behind a PRG's output.
Count nonlinear_after(PrgKind k) {
    switch (k) {
        case PrgKind::AtbPre: return 2;  // Transpose, Softmax
        case PrgKind::ProjLB: return 1;  // LayernormAdd
        case PrgKind::Ffn1LB: return 1;  // Gelu
        case PrgKind::Ffn2LB: return 1;  // LayernormAdd
        default: return 0;
    }
}

struct Work {
    const PrgNode* prg = nullptr;
    MatMulSpec mm;
};

struct StageAccount {
    std::set<std::string> used;
    double busy_core_ns = 0.0;
    Count ops = 0;
};

class Engine {
public:
    Engine(const EdpuPlan& plan, const PlatformProfile& p, const SimConfig& sc, SimReport& r)
        : plan_(plan), p_(p), sc_(sc), r_(r) {
        for (const auto& s : plan.pu_specs) fill_unit_ns_ = std::max(fill_unit_ns_, pu_invocation_time(s, p));
    }

    void set_stage(StageAccount* acc) { acc_ = acc; }

    double run(const Work& w, double t) {
        const PuSpec* spec = plan_.spec(w.prg->pu_kind);
        const double T = pu_invocation_time(*spec, p_);
        const TilingPlan tp = tile_mm(w.mm, *spec);
        const auto& ids = w.prg->pu_instances;
        const Count n = static_cast<Count>(ids.size());
        const Count out = tp.output_tiles();
        double end = t;
        for (Count j = 0; j < n; ++j) {
            const Count share = out / n + (j < out % n ? 1 : 0);
            const Count inv = share * tp.k_tiles * w.mm.count;
            if (inv == 0) continue;
            const double busy = static_cast<double>(inv) * T;
            acc_->used.insert(ids[j]);
            acc_->busy_core_ns += busy * static_cast<double>(spec->core_count);
            r_.pu_busy_ns[ids[j]] += busy;
            event(t, w.prg->id, EventKind::InvocationStart, ids[j]);
            event(t + busy, w.prg->id, EventKind::InvocationEnd, ids[j]);
            end = std::max(end, t + busy);
        }
        acc_->ops += w.mm.ops() * w.mm.count;
        return end;
    }

    double fill_ns(Count nonlinear_stages) const {
        return static_cast<double>(nonlinear_stages * sc_.nonlinear_fill_invocations) * fill_unit_ns_;
    }

    void event(double t, const std::string& prg, EventKind kind, const std::string& pu = {}) {
        if (sc_.record_timeline) r_.timeline.push_back({t, prg, kind, pu});
    }

private:
    const EdpuPlan& plan_;
    const PlatformProfile& p_;
    const SimConfig& sc_;
    SimReport& r_;
    StageAccount* acc_ = nullptr;
    double fill_unit_ns_ = 0.0;
};

// stages[s][i] lists the parallel works of stage s for item i. Returns the
// completion time of every item, nonlinear fill included.
std::vector<double> run_pipeline(Engine& eng, const std::vector<std::vector<std::vector<Work>>>& stages,
                                 double t0, Count nonlinear_stages) {
    const std::size_t items = stages.front().size();
    std::vector<double> prev(items, t0);
    for (const auto& stage : stages) {
        std::vector<double> cur(items, t0);
        double free_at = t0;
        for (std::size_t i = 0; i < items; ++i) {
            const double start = std::max(prev[i], free_at);
            double end = start;
            for (const auto& w : stage[i]) end = std::max(end, eng.run(w, start));
            cur[i] = end;
            free_at = end;
        }
        prev = std::move(cur);
    }
    for (auto& t : prev) t += eng.fill_ns(nonlinear_stages);
    return prev;
}

double run_step(Engine& eng, const PrgNode& prg, const MatMulSpec& mm, double t) {
    return eng.run({&prg, mm}, t) + eng.fill_ns(nonlinear_after(prg.kind));
}

struct StagePrgs {
    std::vector<const PrgNode*> qkv, pre, post;
    const PrgNode* proj = nullptr;
    const PrgNode* ffn1 = nullptr;
    const PrgNode* ffn2 = nullptr;
};

StagePrgs check_plan(const EdpuPlan& plan, const Workload& w) {
    StagePrgs s;
    std::map<MmRole, Count> counts;
    std::map<MmRole, std::string> last_prg;
    for (const auto* group : {&plan.mha_prgs, &plan.ffn_prgs}) {
        for (const auto& prg : *group) {
            const PuSpec* spec = plan.spec(prg.pu_kind);
            if (!spec) throw SimulationError("PRG " + prg.id + ": no PU spec for " + std::string(to_string(prg.pu_kind)));
            if (prg.pu_instances.empty()) throw SimulationError("PRG " + prg.id + ": no PU instances");
            for (const auto& id : prg.pu_instances) {
                const PuInstance* inst = plan.instance(id);
                if (!inst || inst->kind != prg.pu_kind) {
                    throw SimulationError("PRG " + prg.id + ": PU instance " + id + " missing or of the wrong kind");
                }
            }
            for (const auto& mm : prg.assigned_mms) {
                const MatMulSpec* ref = w.find(mm.role);
                if (!ref || ref->m != mm.m || ref->k != mm.k || ref->n != mm.n || ref->stage != mm.stage) {
                    throw SimulationError("PRG " + prg.id + ": assigned " + std::string(to_string(mm.role)) + " " +
                                          std::to_string(mm.m) + "x" + std::to_string(mm.k) + "x" +
                                          std::to_string(mm.n) + " does not match the workload");
                }
                counts[mm.role] += mm.count;
                last_prg[mm.role] = prg.id;
            }
            switch (prg.kind) {
                case PrgKind::QkvLB: s.qkv.push_back(&prg); break;
                case PrgKind::AtbPre: s.pre.push_back(&prg); break;
                case PrgKind::AtbPost: s.post.push_back(&prg); break;
                case PrgKind::ProjLB: s.proj = &prg; break;
                case PrgKind::Ffn1LB: s.ffn1 = &prg; break;
                case PrgKind::Ffn2LB: s.ffn2 = &prg; break;
            }
        }
    }
    for (const auto& mm : w.mms) {
        if (counts[mm.role] != mm.count) {
            const std::string who = last_prg.count(mm.role) ? last_prg[mm.role] : std::string("<none>");
            throw SimulationError("PRG " + who + ": plan covers " + std::to_string(counts[mm.role]) + " of " +
                                  std::to_string(mm.count) + " " + std::string(to_string(mm.role)) +
                                  " instances in the workload");
        }
    }
    if (s.qkv.size() != 3 || s.pre.empty() || s.pre.size() != s.post.size() || !s.proj || !s.ffn1 || !s.ffn2) {
        throw SimulationError("PRG set of the plan is incomplete for an encoder layer");
    }
    if (plan.independent_linear != w.independent_linear) {
        throw SimulationError("PRG " + s.qkv.front()->id + ": plan and workload disagree on independent linear layers");
    }
    return s;
}

std::vector<double> simulate_mha(Engine& eng, const EdpuPlan& plan, const StagePrgs& s, const LayerDims& dims,
                                 Count batch, double t0) {
    const Count lanes = static_cast<Count>(s.pre.size());
    if (plan.pm_mha == ParallelMode::FullyPipelined) {
        const Count blocks = (dims.heads + lanes - 1) / lanes;
        std::vector<std::vector<std::vector<Work>>> stages(4);
        for (Count b = 0; b < batch; ++b) {
            for (Count blk = 0; blk < blocks; ++blk) {
                const Count hb = std::min(lanes, dims.heads - blk * lanes);
                std::vector<Work> qkv, pre, post;
                for (const auto* prg : s.qkv) qkv.push_back({prg, qkv_block_mm(dims, hb)});
                for (Count a = 0; a < hb; ++a) {
                    pre.push_back({s.pre[a], atb_pre_mm(dims)});
                    post.push_back({s.post[a], atb_post_mm(dims)});
                }
                stages[0].push_back(qkv);
                stages[1].push_back(pre);
                stages[2].push_back(post);
                stages[3].push_back({{s.proj, proj_block_mm(dims, hb)}});
            }
        }
        const auto done = run_pipeline(eng, stages, t0, nonlinear_after(PrgKind::AtbPre) + nonlinear_after(PrgKind::ProjLB));
        std::vector<double> ends;
        for (Count b = 0; b < batch; ++b) ends.push_back(done[(b + 1) * blocks - 1]);
        return ends;
    }
    std::vector<double> ends;
    double t = t0;
    for (Count b = 0; b < batch; ++b) {
        for (const auto* prg : s.qkv) {
            for (const auto& mm : prg->assigned_mms) t = run_step(eng, *prg, mm, t);
        }
        double lanes_end = t;
        for (Count a = 0; a < lanes; ++a) {
            double ta = t;
            const Count heads = s.pre[a]->assigned_mms.front().count;
            MatMulSpec pre = s.pre[a]->assigned_mms.front();
            MatMulSpec post = s.post[a]->assigned_mms.front();
            pre.count = 1;
            post.count = 1;
            for (Count h = 0; h < heads; ++h) {
                ta = run_step(eng, *s.pre[a], pre, ta);
                ta = run_step(eng, *s.post[a], post, ta);
            }
            lanes_end = std::max(lanes_end, ta);
        }
        t = lanes_end;
        for (const auto& mm : s.proj->assigned_mms) t = run_step(eng, *s.proj, mm, t);
        ends.push_back(t);
    }
    return ends;
}

std::vector<double> simulate_ffn(Engine& eng, const EdpuPlan& plan, const StagePrgs& s, const LayerDims& dims,
                                 Count batch, double t0) {
    if (plan.pm_ffn == ParallelMode::FullyPipelined) {
        const PuSpec* spec = plan.spec(s.ffn1->pu_kind);
        const Count width = static_cast<Count>(s.ffn1->pu_instances.size()) * spec->extent_n();
        const Count blocks = (dims.dff + width - 1) / width;
        std::vector<std::vector<std::vector<Work>>> stages(2);
        for (Count b = 0; b < batch; ++b) {
            for (Count blk = 0; blk < blocks; ++blk) {
                const Count wb = std::min(width, dims.dff - blk * width);
                stages[0].push_back({{s.ffn1, {dims.seq_len, dims.embed_dim, wb, 1, Stage::Ffn, MmRole::Ffn1LB}}});
                stages[1].push_back({{s.ffn2, {dims.seq_len, wb, dims.embed_dim, 1, Stage::Ffn, MmRole::Ffn2LB}}});
            }
        }
        const auto done = run_pipeline(eng, stages, t0, nonlinear_after(PrgKind::Ffn1LB) + nonlinear_after(PrgKind::Ffn2LB));
        std::vector<double> ends;
        for (Count b = 0; b < batch; ++b) ends.push_back(done[(b + 1) * blocks - 1]);
        return ends;
    }
    std::vector<double> ends;
    double t = t0;
    for (Count b = 0; b < batch; ++b) {
        for (const auto& mm : s.ffn1->assigned_mms) t = run_step(eng, *s.ffn1, mm, t);
        for (const auto& mm : s.ffn2->assigned_mms) t = run_step(eng, *s.ffn2, mm, t);
        ends.push_back(t);
    }
    return ends;
}

Count cores_of(const EdpuPlan& plan, const std::set<std::string>& ids) {
    Count cores = 0;
    for (const auto& id : ids) cores += plan.spec(plan.instance(id)->kind)->core_count;
    return cores;
}

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

}  // namespace

SimReport simulate(const EdpuPlan& plan, const Workload& w, const PlatformProfile& p, const SimConfig& sc) {
    if (sc.batch_size < 1) throw SimulationError("batch_size must be >= 1");
    if (sc.nonlinear_fill_invocations < 0) throw SimulationError("nonlinear_fill_invocations must be >= 0");
    LayerDims dims;
    try {
        dims = layer_dims(w);
    } catch (const PlanningError& e) {
        throw SimulationError(e.what());
    }
    const StagePrgs prgs = check_plan(plan, w);

    SimReport r;
    r.batch_size = sc.batch_size;
    r.deployed_aie = plan.deployed_aie;
    r.deployment_rate = plan.deployment_rate;
    Engine eng(plan, p, sc, r);

    const bool run_mha = sc.stages != StageSelection::FfnOnly;
    const bool run_ffn = sc.stages != StageSelection::MhaOnly;
    StageAccount mha, ffn;
    double t = 0.0;
    std::vector<double> ends;
    if (run_mha) {
        eng.set_stage(&mha);
        eng.event(t, "MHA", EventKind::StageStart);
        ends = simulate_mha(eng, plan, prgs, dims, sc.batch_size, t);
        r.mha_latency_ns = ends.back() - t;
        t = ends.back();
        eng.event(t, "MHA", EventKind::StageEnd);
    }
    if (run_ffn) {
        eng.set_stage(&ffn);
        eng.event(t, "FFN", EventKind::StageStart);
        ends = simulate_ffn(eng, plan, prgs, dims, sc.batch_size, t);
        r.ffn_latency_ns = ends.back() - t;
        t = ends.back();
        eng.event(t, "FFN", EventKind::StageEnd);
    }
    for (std::size_t b = 0; b < ends.size(); ++b) {
        eng.event(ends[b], "batch" + std::to_string(b), EventKind::BatchEnd);
    }
    r.total_latency_ns = r.mha_latency_ns + r.ffn_latency_ns;

    r.mha_ops = mha.ops;
    r.ffn_ops = ffn.ops;
    r.ops = mha.ops + ffn.ops;
    r.tops = safe_div(static_cast<double>(r.ops), r.total_latency_ns) / 1e3;
    r.mha_tops = safe_div(static_cast<double>(r.mha_ops), r.mha_latency_ns) / 1e3;
    r.ffn_tops = safe_div(static_cast<double>(r.ffn_ops), r.ffn_latency_ns) / 1e3;
    r.gops_per_aie = safe_div(r.tops * 1e3, static_cast<double>(r.deployed_aie));

    const double deployed = static_cast<double>(plan.deployed_aie);
    r.eff_util_mha = run_mha ? safe_div(static_cast<double>(cores_of(plan, mha.used)), deployed) : 0.0;
    r.eff_util_ffn = run_ffn ? safe_div(static_cast<double>(cores_of(plan, ffn.used)), deployed) : 0.0;
    r.busy_ratio_mha = safe_div(mha.busy_core_ns, deployed * r.mha_latency_ns);
    r.busy_ratio_ffn = safe_div(ffn.busy_core_ns, deployed * r.ffn_latency_ns);
    if (run_mha && run_ffn) {
        r.eff_util_avg = (r.eff_util_mha + r.eff_util_ffn) / 2.0;
        r.eff_util_weighted = safe_div(r.eff_util_mha * r.mha_latency_ns + r.eff_util_ffn * r.ffn_latency_ns,
                                       r.total_latency_ns);
    } else {
        r.eff_util_avg = run_mha ? r.eff_util_mha : r.eff_util_ffn;
        r.eff_util_weighted = r.eff_util_avg;
    }

    if (sc.record_timeline) {
        std::stable_sort(r.timeline.begin(), r.timeline.end(), [](const SimEvent& a, const SimEvent& b) {
            return std::tie(a.time_ns, a.prg_id, a.kind, a.pu_instance) <
                   std::tie(b.time_ns, b.prg_id, b.kind, b.pu_instance);
        });
    }

    r.assumptions = {
        "analytic service time: ceil(output tiles / PU instances) * k tiles * PU invocation time",
        "PU invocation time = max(t_calc, PLIO fan-out * t_window)",
        "MHA and FFN stages run serially; each stage covers the whole batch",
        "PL nonlinear operators add " + std::to_string(sc.nonlinear_fill_invocations) +
            " invocation time(s) of pipeline depth each, no steady-state cost",
        "pipelined MHA blocks hold P_ATB heads; pipelined FFN blocks hold one hidden slice per FFN1 PU",
        "eff_util counts cores that run at least one invocation in the stage",
        "DRAM/NoC contention not modeled",
    };
    return r;
}

std::vector<SweepPoint> sweep_batch(const EdpuPlan& plan, const Workload& w, const PlatformProfile& p,
                                    const std::vector<Count>& batches, const SimConfig& base) {
    if (batches.empty()) throw SimulationError("batch list is empty");
    std::vector<SweepPoint> out;
    for (Count b : batches) {
        SimConfig sc = base;
        sc.batch_size = b;
        sc.record_timeline = false;
        const SimReport r = simulate(plan, w, p, sc);
        out.push_back({b, r.tops, r.total_latency_ns, r.eff_util_avg});
    }
    return out;
}

Utilization utilization(const SimReport& report, const EdpuPlan& plan) {
    return {plan.deployment_rate, report.eff_util_mha, report.eff_util_ffn, report.eff_util_avg,
            report.eff_util_weighted};
}

nlohmann::json to_json(const SimReport& r) {
    nlohmann::json busy = nlohmann::json::object();
    for (const auto& [id, ns] : r.pu_busy_ns) busy[id] = ns;
    return {{"batch_size", r.batch_size},
            {"latency_ns", {{"mha", r.mha_latency_ns}, {"ffn", r.ffn_latency_ns}, {"total", r.total_latency_ns}}},
            {"ops", {{"mha", r.mha_ops}, {"ffn", r.ffn_ops}, {"total", r.ops}}},
            {"tops", r.tops},
            {"tops_by_stage", {{"mha", r.mha_tops}, {"ffn", r.ffn_tops}}},
            {"gops_per_aie", r.gops_per_aie},
            {"deployed_aie", r.deployed_aie},
            {"deployment_rate", r.deployment_rate},
            {"eff_util",
             {{"mha", r.eff_util_mha}, {"ffn", r.eff_util_ffn}, {"avg_simple", r.eff_util_avg},
              {"avg_weighted", r.eff_util_weighted}}},
            {"busy_ratio", {{"mha", r.busy_ratio_mha}, {"ffn", r.busy_ratio_ffn}}},
            {"pu_busy_ns", busy},
            {"assumptions", r.assumptions}};
}

std::string timeline_csv(const SimReport& r) {
    std::ostringstream os;
    os << "time_ns,prg,kind,pu\n";
    char buf[64];
    for (const auto& e : r.timeline) {
        std::snprintf(buf, sizeof buf, "%.3f", e.time_ns);
        os << buf << ',' << e.prg_id << ',' << to_string(e.kind) << ',' << e.pu_instance << '\n';
    }
    return os.str();
}

}  // namespace catdse
