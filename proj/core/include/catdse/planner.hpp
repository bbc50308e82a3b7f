// planner.hpp: the customization strategy.
//
// Order of decisions for one model/platform pair:
//   1. PU catalog (single-core MM size, PLIO fan-out)
//   2. ATB parallelism P_ATB (head ratio, falling back to the throughput ratio)
//   3. per-stage parallel mode from Factor1 / Factor2
//   4. PU allocation to PRGs, deployment rate
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "catdse/platform.hpp"
#include "catdse/pu_design.hpp"
#include "catdse/workload.hpp"

namespace catdse {

enum class ParallelMode { FullyPipelined, HybridSerialAtbParallel, Serial };
enum class Trigger { None, Factor1, Factor2, Both };

// WorkedValue: N_max = floor(Total_AIE / largest PU cores).
// Strict: N_max = floor(Total_AIE / PLIO_AIE^2), the formula as printed.
enum class Factor1Formula { WorkedValue, Strict };

std::string_view to_string(ParallelMode m);
std::string_view to_string(Trigger t);
ParallelMode parallel_mode_from_string(std::string_view s);

struct PlanDecision {
    Stage stage = Stage::Mha;
    double factor1 = 0.0;         // value the decision used
    double factor1_worked = 0.0;
    double factor1_strict = 0.0;
    Count factor2_bytes = 0;
    Count total_buffer_bytes = 0;
    Count max_pipeline_depth = 0;
    Factor1Formula formula = Factor1Formula::WorkedValue;
    ParallelMode chosen = ParallelMode::FullyPipelined;
    Trigger triggered_by = Trigger::None;

    bool operator==(const PlanDecision&) const = default;
};

/// PRG chain length of a fully pipelined stage: 4 for MHA, 2 for FFN.
Count max_pipeline_depth(Stage stage);

double compute_factor1(Stage stage, const TransformerConfig& cfg, const PlatformProfile& p,
                       const PuCatalog& catalog,
                       Factor1Formula formula = Factor1Formula::WorkedValue);

/// MHA on-chip buffer components, in bytes, for a fully pipelined MHA stage.
struct MhaBufferBreakdown {
    Count qkv_out = 0;    // 3 * L * (d * P_ATB)
    Count atb_io = 0;     // 4 * L * d * P_ATB
    Count attention = 0;  // L * L * P_ATB / 2
    Count proj_io = 0;    // L * E + L * (d * P_ATB)
    Count weights = 0;    // 4 * E^2 + 2 * E * Dff

    Count total() const { return qkv_out + atb_io + attention + proj_io + weights; }
};

MhaBufferBreakdown mha_buffer_breakdown(const TransformerConfig& cfg, Count p_atb);

/// Factor2 of the MHA stage. Serial mode keeps one ATB's worth of buffers.
Count buffer_footprint(const TransformerConfig& cfg, Count p_atb, ParallelMode mode);

/// Factor2 of the FFN stage: both FFN weight matrices plus in/hidden/out activations.
Count ffn_buffer_footprint(const TransformerConfig& cfg);

PlanDecision decide_parallel_mode(Stage stage, const TransformerConfig& cfg,
                                  const PlatformProfile& p, const PuCatalog& catalog, Count p_atb,
                                  Factor1Formula formula = Factor1Formula::WorkedValue);

struct AtbRatio {
    Count qkv_output_heads = 0;
    Count atb_input_heads = 0;
    double throughput_qkv = 0.0;
    double throughput_atb = 0.0;
};

/// Head ratio when integral, otherwise round(throughput ratio), at least 1.
Count decide_p_atb(const AtbRatio& r);

/// QKV LB output width per invocation vs. one head's width, rates over the LB block time.
AtbRatio atb_ratio(const TransformerConfig& cfg, const PuCatalog& catalog);

enum class PrgKind { QkvLB, ProjLB, AtbPre, AtbPost, Ffn1LB, Ffn2LB };
std::string_view to_string(PrgKind k);
PrgKind prg_kind_from_string(std::string_view s);

struct PuInstance {
    std::string id;
    PuKind kind = PuKind::Large;
    bool operator==(const PuInstance&) const = default;
};

struct BufferSpec {
    std::string label;
    Count bytes = 0;
    bool operator==(const BufferSpec&) const = default;
};

struct PrgNode {
    std::string id;
    PrgKind kind = PrgKind::QkvLB;
    Stage stage = Stage::Mha;
    std::vector<MatMulSpec> assigned_mms;
    PuKind pu_kind = PuKind::Large;
    std::vector<std::string> pu_instances;  // one PU group, identical kind
    std::vector<BufferSpec> buffers;

    bool operator==(const PrgNode&) const = default;
};

struct Decisions {
    PlanDecision mha;
    PlanDecision ffn;
    Count p_atb = 1;
};

struct EdpuPlan {
    static constexpr int kVersion = 1;

    TransformerConfig model;
    std::string profile_name;
    Count total_aie = 0;
    bool independent_linear = true;
    ParallelMode pm_mha = ParallelMode::FullyPipelined;
    ParallelMode pm_ffn = ParallelMode::FullyPipelined;
    Count p_atb = 1;
    std::vector<PuSpec> pu_specs;
    std::vector<PuInstance> instances;
    std::vector<PrgNode> mha_prgs;
    std::vector<PrgNode> ffn_prgs;
    Count deployed_aie = 0;
    double deployment_rate = 0.0;
    Count buffer_footprint_bytes = 0;
    PlanDecision mha_decision;
    PlanDecision ffn_decision;
    std::vector<std::string> notes;

    const PuSpec* spec(PuKind kind) const;
    const PuInstance* instance(const std::string& id) const;
    /// Cores of the distinct PU instances a PRG group holds.
    Count cores_of(const PrgNode& prg) const;

    bool operator==(const EdpuPlan&) const = default;
};

struct AllocateOptions {
    // Force a pipelined FFN stage (two LB PUs per FFN LB) whatever the mode rule says.
    bool force_pipelined_ffn = false;
};

/// Rule-based PU allocation. Throws PlanningError naming the binding
/// constraint when no mode fits the platform.
EdpuPlan allocate(const TransformerConfig& cfg, const Workload& w, const Decisions& decisions,
                  const PlatformProfile& p, const PuCatalog& catalog,
                  const AllocateOptions& options = {});

struct DesignOptions {
    bool independent_linear = true;
    bool strict_factor1 = false;
    bool force_pipelined_ffn = false;
};

/// Whole strategy: effective profile, workload, catalog, P_ATB, modes, allocation.
EdpuPlan design_edpu(const TransformerConfig& cfg, const PlatformProfile& p,
                     const DesignOptions& options = {});

nlohmann::json to_json(const PlanDecision& d);
nlohmann::json to_json(const EdpuPlan& plan);
/// Throws ArtifactError on malformed or unsupported documents.
EdpuPlan plan_from_json(const nlohmann::json& doc);

}  // namespace catdse

namespace catdse {

/// Layer dimensions recovered from a workload.
struct LayerDims {
    Count seq_len = 0;
    Count embed_dim = 0;
    Count head_dim = 0;
    Count dff = 0;
    Count heads = 0;
    bool independent_linear = true;
};

/// Throws PlanningError when a required MM role is missing.
LayerDims layer_dims(const Workload& w);

// Per-block work of a pipelined MHA stage. A block is the group of heads one
// QKV LB pass produces for the ATBs (P_ATB heads, fewer in the last block).
MatMulSpec qkv_block_mm(const LayerDims& d, Count heads);
MatMulSpec proj_block_mm(const LayerDims& d, Count heads);
MatMulSpec atb_pre_mm(const LayerDims& d);
MatMulSpec atb_post_mm(const LayerDims& d);

/// Wall time of `mm` (all its instances, back to back) on `count` identical PUs.
double group_time(const MatMulSpec& mm, const PuSpec& spec, Count count, const PlatformProfile& p);

}  // namespace catdse
