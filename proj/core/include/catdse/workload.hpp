// workload.hpp: operator inventory of one Encoder/Decoder layer.
//
// One EDPU call executes a multi-head attention (MHA) stage followed by a
// feed-forward (FFN) stage. The matrix multiplications of both stages are
// derived here from the model hyperparameters; nonlinear operators are
// carried along for accounting but never timed on the AIE array.
//
// With the QKV linear layers aggregated ("independent linear") the layer is
//   3 x (L, E, E) QKV + head x (L, d, L) QK^T + head x (L, L, d) AV
//   + (L, E, E) projection + (L, E, Dff) + (L, Dff, E)
// where d = E / head. Without aggregation the QKV projections are split per
// head into 3*head x (L, E, d).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace catdse {

using Count = std::int64_t;

struct TransformerConfig {
    Count head = 0;
    Count embed_dim = 0;
    Count dff = 0;
    Count seq_len = 0;
    Count layers = 1;
    int data_bits = 8;
    // Caps the platform's AIE count (the "allowable number of AIEs").
    std::optional<Count> allowable_aie;

    Count head_dim() const { return embed_dim / head; }
    Count bytes_per_element() const { return data_bits / 8; }

    /// Throws ConfigError naming the first violated field.
    void validate() const;

    bool operator==(const TransformerConfig&) const = default;
};

TransformerConfig load_model_config(const nlohmann::json& doc);
nlohmann::json to_json(const TransformerConfig& cfg);

enum class Stage { Mha, Ffn };
enum class MmRole { QkvLB, AtbQKt, AtbAV, ProjLB, Ffn1LB, Ffn2LB };
enum class NonlinearKind { Softmax, Transpose, Gelu, LayernormAdd };

std::string_view to_string(Stage s);
std::string_view to_string(MmRole r);
std::string_view to_string(NonlinearKind k);
Stage stage_from_string(std::string_view s);
MmRole role_from_string(std::string_view s);
Stage stage_of(MmRole r);

struct MatMulSpec {
    Count m = 1;
    Count k = 1;
    Count n = 1;
    Count count = 1;
    Stage stage = Stage::Mha;
    MmRole role = MmRole::QkvLB;

    Count macs() const { return m * k * n; }
    Count ops() const { return 2 * macs(); }

    bool operator==(const MatMulSpec&) const = default;
};

struct NonlinearOpSpec {
    NonlinearKind kind = NonlinearKind::Softmax;
    Count count = 0;
    Count rows = 1;
    Count cols = 1;

    bool operator==(const NonlinearOpSpec&) const = default;
};

struct Workload {
    std::vector<MatMulSpec> mms;
    std::vector<NonlinearOpSpec> nonlinear;
    bool independent_linear = true;

    Count mm_instances() const;
    /// First MM with the given role, or nullptr.
    const MatMulSpec* find(MmRole role) const;

    bool operator==(const Workload&) const = default;
};

enum class LayerKind { Encoder, Decoder };

struct WorkloadOptions {
    bool independent_linear = true;
    // Decoder layers carry one extra (cross-)attention group with the same shapes.
    LayerKind layer = LayerKind::Encoder;
};

Workload derive_workload(const TransformerConfig& cfg, bool independent_linear);
Workload derive_workload(const TransformerConfig& cfg, const WorkloadOptions& options);

/// Ops charged per element of a nonlinear operator when include_nonlinear is set.
/// Reporting-only constants: Softmax 5, Transpose 0, Gelu 8, LayernormAdd 6.
Count nonlinear_ops_per_element(NonlinearKind kind);

Count total_ops(const Workload& w, bool include_nonlinear = false);
Count total_ops(const Workload& w, Stage stage, bool include_nonlinear = false);

/// 5*head + 3 without QKV aggregation, 2*head + 6 with it.
Count mm_count(const TransformerConfig& cfg, bool independent_linear);

}  // namespace catdse
