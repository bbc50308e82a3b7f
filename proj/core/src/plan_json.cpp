#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "catdse/errors.hpp"
#include "catdse/planner.hpp"

namespace catdse {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json mm_to_json(const MatMulSpec& mm) {
    return {{"role", to_string(mm.role)}, {"stage", to_string(mm.stage)}, {"m", mm.m},
            {"k", mm.k}, {"n", mm.n}, {"count", mm.count}};
}

MatMulSpec mm_from_json(const json& j) {
    return {j.at("m").get<Count>(), j.at("k").get<Count>(), j.at("n").get<Count>(),
            j.at("count").get<Count>(), stage_from_string(j.at("stage").get<std::string>()),
            role_from_string(j.at("role").get<std::string>())};
}

json prg_to_json(const PrgNode& prg) {
    json mms = json::array();
    for (const auto& mm : prg.assigned_mms) mms.push_back(mm_to_json(mm));
    json buffers = json::array();
    for (const auto& b : prg.buffers) buffers.push_back({{"label", b.label}, {"bytes", b.bytes}});
    return {{"id", prg.id},
            {"kind", to_string(prg.kind)},
            {"stage", to_string(prg.stage)},
            {"pu_kind", to_string(prg.pu_kind)},
            {"pu_instances", prg.pu_instances},
            {"assigned_mms", mms},
            {"buffers", buffers}};
}

PrgNode prg_from_json(const json& j) {
    PrgNode prg;
    prg.id = j.at("id").get<std::string>();
    prg.kind = prg_kind_from_string(j.at("kind").get<std::string>());
    prg.stage = stage_from_string(j.at("stage").get<std::string>());
    prg.pu_kind = pu_kind_from_string(j.at("pu_kind").get<std::string>());
    prg.pu_instances = j.at("pu_instances").get<std::vector<std::string>>();
    for (const auto& mm : j.at("assigned_mms")) prg.assigned_mms.push_back(mm_from_json(mm));
    for (const auto& b : j.at("buffers")) {
        prg.buffers.push_back({b.at("label").get<std::string>(), b.at("bytes").get<Count>()});
    }
    return prg;
}

PlanDecision decision_from_json(const json& j) {
    PlanDecision d;
    d.stage = stage_from_string(j.at("stage").get<std::string>());
    d.factor1 = number_or_inf(j.at("factor1"));
    d.factor1_worked = number_or_inf(j.at("factor1_worked"));
    d.factor1_strict = number_or_inf(j.at("factor1_strict"));
    d.factor2_bytes = j.at("factor2_bytes").get<Count>();
    d.total_buffer_bytes = j.at("total_buffer_bytes").get<Count>();
    d.max_pipeline_depth = j.at("max_pipeline_depth").get<Count>();
    const auto formula = j.at("factor1_formula").get<std::string>();
    if (formula == "worked") {
        d.formula = Factor1Formula::WorkedValue;
    } else if (formula == "strict") {
        d.formula = Factor1Formula::Strict;
    } else {
        throw ArtifactError("unknown factor1_formula '" + formula + "'");
    }
    d.chosen = parallel_mode_from_string(j.at("chosen").get<std::string>());
    const auto trig = j.at("triggered_by").get<std::string>();
    bool found = false;
    for (auto t : {Trigger::None, Trigger::Factor1, Trigger::Factor2, Trigger::Both}) {
        if (to_string(t) == trig) {
            d.triggered_by = t;
            found = true;
        }
    }
    if (!found) throw ArtifactError("unknown trigger '" + trig + "'");
    return d;
}

}  // namespace

json to_json(const PlanDecision& d) {
    return {{"stage", to_string(d.stage)},
            {"factor1", finite_or_null(d.factor1)},
            {"factor1_worked", finite_or_null(d.factor1_worked)},
            {"factor1_strict", finite_or_null(d.factor1_strict)},
            {"factor1_formula", d.formula == Factor1Formula::WorkedValue ? "worked" : "strict"},
            {"factor2_bytes", d.factor2_bytes},
            {"total_buffer_bytes", d.total_buffer_bytes},
            {"max_pipeline_depth", d.max_pipeline_depth},
            {"chosen", to_string(d.chosen)},
            {"triggered_by", to_string(d.triggered_by)}};
}

json to_json(const EdpuPlan& plan) {
    json specs = json::array();
    for (const auto& s : plan.pu_specs) specs.push_back(to_json(s));
    json instances = json::array();
    for (const auto& i : plan.instances) instances.push_back({{"id", i.id}, {"kind", to_string(i.kind)}});
    json mha = json::array();
    for (const auto& p : plan.mha_prgs) mha.push_back(prg_to_json(p));
    json ffn = json::array();
    for (const auto& p : plan.ffn_prgs) ffn.push_back(prg_to_json(p));
    return {{"plan_version", EdpuPlan::kVersion},
            {"model", to_json(plan.model)},
            {"profile_name", plan.profile_name},
            {"total_aie", plan.total_aie},
            {"independent_linear", plan.independent_linear},
            {"pm_mha", to_string(plan.pm_mha)},
            {"pm_ffn", to_string(plan.pm_ffn)},
            {"p_atb", plan.p_atb},
            {"pu_specs", specs},
            {"pu_instances", instances},
            {"mha_prgs", mha},
            {"ffn_prgs", ffn},
            {"deployed_aie", plan.deployed_aie},
            {"deployment_rate", plan.deployment_rate},
            {"buffer_footprint_bytes", plan.buffer_footprint_bytes},
            {"mha_decision", to_json(plan.mha_decision)},
            {"ffn_decision", to_json(plan.ffn_decision)},
            {"notes", plan.notes}};
}

EdpuPlan plan_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw ArtifactError("plan document is not an object");
        const int version = doc.at("plan_version").get<int>();
        if (version != EdpuPlan::kVersion) {
            throw ArtifactError("unsupported plan_version " + std::to_string(version) +
                                " (expected " + std::to_string(EdpuPlan::kVersion) + ")");
        }
        EdpuPlan plan;
        plan.model = load_model_config(doc.at("model"));
        plan.profile_name = doc.at("profile_name").get<std::string>();
        plan.total_aie = doc.at("total_aie").get<Count>();
        plan.independent_linear = doc.at("independent_linear").get<bool>();
        plan.pm_mha = parallel_mode_from_string(doc.at("pm_mha").get<std::string>());
        plan.pm_ffn = parallel_mode_from_string(doc.at("pm_ffn").get<std::string>());
        plan.p_atb = doc.at("p_atb").get<Count>();
        for (const auto& s : doc.at("pu_specs")) plan.pu_specs.push_back(pu_spec_from_json(s));
        for (const auto& i : doc.at("pu_instances")) {
            plan.instances.push_back(
                {i.at("id").get<std::string>(), pu_kind_from_string(i.at("kind").get<std::string>())});
        }
        for (const auto& p : doc.at("mha_prgs")) plan.mha_prgs.push_back(prg_from_json(p));
        for (const auto& p : doc.at("ffn_prgs")) plan.ffn_prgs.push_back(prg_from_json(p));
        plan.deployed_aie = doc.at("deployed_aie").get<Count>();
        plan.deployment_rate = doc.at("deployment_rate").get<double>();
        plan.buffer_footprint_bytes = doc.at("buffer_footprint_bytes").get<Count>();
        plan.mha_decision = decision_from_json(doc.at("mha_decision"));
        plan.ffn_decision = decision_from_json(doc.at("ffn_decision"));
        plan.notes = doc.at("notes").get<std::vector<std::string>>();

        for (const auto* group : {&plan.mha_prgs, &plan.ffn_prgs}) {
            for (const auto& prg : *group) {
                for (const auto& id : prg.pu_instances) {
                    const PuInstance* inst = plan.instance(id);
                    if (!inst) throw ArtifactError("PRG " + prg.id + " names unknown PU instance " + id);
                    if (!plan.spec(inst->kind)) {
                        throw ArtifactError("PU instance " + id + " has no matching pu_spec");
                    }
                }
            }
        }
        return plan;
    } catch (const ArtifactError&) {
        throw;
    } catch (const json::exception& e) {
        throw ArtifactError(std::string("malformed plan: ") + e.what());
    } catch (const std::runtime_error& e) {
        throw ArtifactError(std::string("invalid plan: ") + e.what());
    }
}

}  // namespace catdse
