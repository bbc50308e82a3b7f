// simulator.hpp: deterministic stage-granularity simulation of an EdpuPlan.
//
// MHA runs over the whole batch, then FFN. Pipelined stages follow the
// recurrence start[s][i] = max(end[s-1][i], end[s][i-1]) over blocks of
// work; hybrid/serial stages run PRGs back to back on the shared PU set.
#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "catdse/planner.hpp"

namespace catdse {

enum class StageSelection { MhaOnly, FfnOnly, Both };

struct SimConfig {
    Count batch_size = 1;
    StageSelection stages = StageSelection::Both;
    bool record_timeline = false;
    // Pipeline depth added by each PL nonlinear operator, in PU invocation times.
    Count nonlinear_fill_invocations = 1;
};

enum class EventKind { InvocationStart, InvocationEnd, StageStart, StageEnd, BatchEnd };
std::string_view to_string(EventKind k);

struct SimEvent {
    double time_ns = 0.0;
    std::string prg_id;
    EventKind kind = EventKind::InvocationStart;
    std::string pu_instance;

    bool operator==(const SimEvent&) const = default;
};

struct SimReport {
    Count batch_size = 0;
    double mha_latency_ns = 0.0;
    double ffn_latency_ns = 0.0;
    double total_latency_ns = 0.0;
    Count mha_ops = 0;
    Count ffn_ops = 0;
    Count ops = 0;
    double tops = 0.0;
    double mha_tops = 0.0;
    double ffn_tops = 0.0;
    double gops_per_aie = 0.0;
    Count deployed_aie = 0;
    double deployment_rate = 0.0;
    // Running cores / deployed cores, per stage.
    double eff_util_mha = 0.0;
    double eff_util_ffn = 0.0;
    double eff_util_avg = 0.0;       // simple mean over the simulated stages
    double eff_util_weighted = 0.0;  // weighted by stage latency
    // Busy core-time / (deployed cores * stage latency).
    double busy_ratio_mha = 0.0;
    double busy_ratio_ffn = 0.0;
    std::map<std::string, double> pu_busy_ns;
    std::vector<SimEvent> timeline;
    std::vector<std::string> assumptions;
};

/// Throws SimulationError naming the PRG when plan and workload disagree.
SimReport simulate(const EdpuPlan& plan, const Workload& w, const PlatformProfile& p,
                   const SimConfig& sc = {});

struct SweepPoint {
    Count batch = 0;
    double tops = 0.0;
    double latency_ns = 0.0;
    double eff_util_avg = 0.0;
};

/// One point per batch size, in the order given.
std::vector<SweepPoint> sweep_batch(const EdpuPlan& plan, const Workload& w,
                                    const PlatformProfile& p, const std::vector<Count>& batches,
                                    const SimConfig& base = {});

struct Utilization {
    double deployment_rate = 0.0;
    double eff_util_mha = 0.0;
    double eff_util_ffn = 0.0;
    double avg_simple = 0.0;
    double avg_weighted = 0.0;
};

Utilization utilization(const SimReport& report, const EdpuPlan& plan);

nlohmann::json to_json(const SimReport& r);
/// time_ns,prg,kind,pu
std::string timeline_csv(const SimReport& r);

// Mode comparison over one MHA layer (aggregated vs independent linear
// layers, serial vs pipelined ATBs, ATB parallelism 1 vs 4).
struct ModeRow {
    int lab = 0;
    std::string description;
    bool independent_linear = false;
    std::string atb_mode;
    Count atb_parallelism = 1;
    double latency_ns = 0.0;
    double speedup = 0.0;
};

struct ModeComparison {
    PuKind pu_kind = PuKind::Standard;
    Count pu_instances = 0;
    Count batch = 0;
    std::vector<ModeRow> rows;
};

ModeComparison compare_modes(const TransformerConfig& cfg, const PlatformProfile& p);

}  // namespace catdse
