#include "catdse/workload.hpp"

#include <array>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"

namespace catdse {

void TransformerConfig::validate() const {
    auto positive = [](const char* name, Count v) {
        if (v < 1) throw ConfigError(name, "must be >= 1, got " + std::to_string(v));
    };
    positive("head", head);
    positive("embed_dim", embed_dim);
    positive("dff", dff);
    positive("seq_len", seq_len);
    positive("layers", layers);
    if (embed_dim % head != 0) {
        throw ConfigError("embed_dim", "must be divisible by head (" + std::to_string(embed_dim) +
                                           " % " + std::to_string(head) + " != 0)");
    }
    if (data_bits != 8 && data_bits != 16 && data_bits != 32) {
        throw ConfigError("data_bits", "must be one of 8, 16, 32, got " + std::to_string(data_bits));
    }
    if (allowable_aie && *allowable_aie < 1) {
        throw ConfigError("allowable_aie", "must be >= 1");
    }
}

TransformerConfig load_model_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("", "model config must be a JSON object");
    static const std::set<std::string> required = {"head",   "embed_dim", "dff",
                                                   "seq_len", "layers",   "data_bits"};
    for (const auto& [key, _] : doc.items()) {
        if (!required.contains(key) && key != "allowable_aie") {
            throw ConfigError(key, "unknown key in model config");
        }
    }
    auto integer = [&](const char* key) -> Count {
        if (!doc.contains(key)) throw ConfigError(key, "missing required key");
        const auto& v = doc.at(key);
        if (!v.is_number_integer()) throw ConfigError(key, "must be an integer");
        return v.get<Count>();
    };
    TransformerConfig cfg;
    cfg.head = integer("head");
    cfg.embed_dim = integer("embed_dim");
    cfg.dff = integer("dff");
    cfg.seq_len = integer("seq_len");
    cfg.layers = integer("layers");
    cfg.data_bits = static_cast<int>(integer("data_bits"));
    if (doc.contains("allowable_aie")) cfg.allowable_aie = integer("allowable_aie");
    cfg.validate();
    return cfg;
}

nlohmann::json to_json(const TransformerConfig& cfg) {
    nlohmann::json j = {{"head", cfg.head},       {"embed_dim", cfg.embed_dim},
                        {"dff", cfg.dff},         {"seq_len", cfg.seq_len},
                        {"layers", cfg.layers},   {"data_bits", cfg.data_bits}};
    if (cfg.allowable_aie) j["allowable_aie"] = *cfg.allowable_aie;
    return j;
}

namespace {

constexpr std::array<std::pair<MmRole, std::string_view>, 6> kRoleNames = {{
    {MmRole::QkvLB, "QkvLB"},
    {MmRole::AtbQKt, "AtbQKt"},
    {MmRole::AtbAV, "AtbAV"},
    {MmRole::ProjLB, "ProjLB"},
    {MmRole::Ffn1LB, "Ffn1LB"},
    {MmRole::Ffn2LB, "Ffn2LB"},
}};

}  // namespace

std::string_view to_string(Stage s) { return s == Stage::Mha ? "MHA" : "FFN"; }

std::string_view to_string(MmRole r) {
    for (const auto& [role, name] : kRoleNames) {
        if (role == r) return name;
    }
    return "?";
}

std::string_view to_string(NonlinearKind k) {
    switch (k) {
        case NonlinearKind::Softmax: return "Softmax";
        case NonlinearKind::Transpose: return "Transpose";
        case NonlinearKind::Gelu: return "Gelu";
        case NonlinearKind::LayernormAdd: return "LayernormAdd";
    }
    return "?";
}

Stage stage_from_string(std::string_view s) {
    if (s == "MHA") return Stage::Mha;
    if (s == "FFN") return Stage::Ffn;
    throw ArtifactError("unknown stage '" + std::string(s) + "'");
}

MmRole role_from_string(std::string_view s) {
    for (const auto& [role, name] : kRoleNames) {
        if (name == s) return role;
    }
    throw ArtifactError("unknown matmul role '" + std::string(s) + "'");
}

Stage stage_of(MmRole r) {
    return (r == MmRole::Ffn1LB || r == MmRole::Ffn2LB) ? Stage::Ffn : Stage::Mha;
}

Count Workload::mm_instances() const {
    return std::accumulate(mms.begin(), mms.end(), Count{0},
                           [](Count acc, const MatMulSpec& mm) { return acc + mm.count; });
}

const MatMulSpec* Workload::find(MmRole role) const {
    for (const auto& mm : mms) {
        if (mm.role == role) return &mm;
    }
    return nullptr;
}

Workload derive_workload(const TransformerConfig& cfg, bool independent_linear) {
    return derive_workload(cfg, WorkloadOptions{independent_linear, LayerKind::Encoder});
}

Workload derive_workload(const TransformerConfig& cfg, const WorkloadOptions& options) {
    cfg.validate();
    const Count L = cfg.seq_len;
    const Count E = cfg.embed_dim;
    const Count d = cfg.head_dim();
    const Count H = cfg.head;
    const Count attention_groups = options.layer == LayerKind::Decoder ? 2 : 1;

    Workload w;
    w.independent_linear = options.independent_linear;
    if (options.independent_linear) {
        w.mms.push_back({L, E, E, 3, Stage::Mha, MmRole::QkvLB});
    } else {
        w.mms.push_back({L, E, d, 3 * H, Stage::Mha, MmRole::QkvLB});
    }
    w.mms.push_back({L, d, L, H * attention_groups, Stage::Mha, MmRole::AtbQKt});
    w.mms.push_back({L, L, d, H * attention_groups, Stage::Mha, MmRole::AtbAV});
    w.mms.push_back({L, E, E, 1, Stage::Mha, MmRole::ProjLB});
    w.mms.push_back({L, E, cfg.dff, 1, Stage::Ffn, MmRole::Ffn1LB});
    w.mms.push_back({L, cfg.dff, E, 1, Stage::Ffn, MmRole::Ffn2LB});

    w.nonlinear.push_back({NonlinearKind::Softmax, H * attention_groups, L, L});
    w.nonlinear.push_back({NonlinearKind::Transpose, H * attention_groups, L, d});
    w.nonlinear.push_back({NonlinearKind::Gelu, 1, L, cfg.dff});
    w.nonlinear.push_back({NonlinearKind::LayernormAdd, 2, L, E});
    return w;
}

Count nonlinear_ops_per_element(NonlinearKind kind) {
    switch (kind) {
        case NonlinearKind::Softmax: return 5;
        case NonlinearKind::Transpose: return 0;
        case NonlinearKind::Gelu: return 8;
        case NonlinearKind::LayernormAdd: return 6;
    }
    return 0;
}

namespace {

Stage stage_of(NonlinearKind k, Count index_of_layernorm) {
    if (k == NonlinearKind::Gelu) return Stage::Ffn;
    if (k == NonlinearKind::LayernormAdd) return index_of_layernorm == 0 ? Stage::Mha : Stage::Ffn;
    return Stage::Mha;
}

Count sum_ops(const Workload& w, std::optional<Stage> stage, bool include_nonlinear) {
    Count ops = 0;
    for (const auto& mm : w.mms) {
        if (!stage || mm.stage == *stage) ops += mm.ops() * mm.count;
    }
    if (!include_nonlinear) return ops;
    for (const auto& op : w.nonlinear) {
        const Count per_instance = op.rows * op.cols * nonlinear_ops_per_element(op.kind);
        if (!stage) {
            ops += per_instance * op.count;
            continue;
        }
        // One LayernormAdd closes each stage.
        for (Count i = 0; i < op.count; ++i) {
            if (stage_of(op.kind, op.kind == NonlinearKind::LayernormAdd ? i : 0) == *stage) {
                ops += per_instance;
            }
        }
    }
    return ops;
}

}  // namespace

Count total_ops(const Workload& w, bool include_nonlinear) {
    return sum_ops(w, std::nullopt, include_nonlinear);
}

Count total_ops(const Workload& w, Stage stage, bool include_nonlinear) {
    return sum_ops(w, stage, include_nonlinear);
}

Count mm_count(const TransformerConfig& cfg, bool independent_linear) {
    return independent_linear ? 2 * cfg.head + 6 : 5 * cfg.head + 3;
}

}  // namespace catdse
