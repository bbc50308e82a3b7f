#include "catdse_cli/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "catdse/codegen.hpp"
#include "catdse/errors.hpp"
#include "catdse/simulator.hpp"

#ifndef CATDSE_DATA_DIR
#define CATDSE_DATA_DIR "."
#endif

namespace catdse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Count kTableBatch = 16;

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw ConfigError("out", "cannot write " + path.string());
}

fs::path prepare_out(const RunBundle& b) {
    std::error_code ec;
    fs::create_directories(b.out, ec);
    if (ec || !fs::is_directory(b.out)) throw ConfigError("out", "cannot create output directory " + b.out.string());
    return b.out;
}

json parse_config_file(const fs::path& path, const std::string& field) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const std::exception&) {
        throw ConfigError(field, "cannot read " + path.string());
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(field, path.string() + " is not valid JSON: " + e.what());
    }
}

fs::path locate(const std::string& path_or_name, const fs::path& dir, const std::string& field) {
    if (fs::is_regular_file(path_or_name)) return path_or_name;
    const fs::path builtin = dir / (path_or_name + ".json");
    if (fs::is_regular_file(builtin)) return builtin;
    throw ConfigError(field, "'" + path_or_name + "' is neither a file nor a builtin name in " + dir.string());
}

EdpuPlan load_plan(const RunBundle& b) {
    const fs::path path = b.plan ? *b.plan : b.out / "plan.json";
    std::string text;
    try {
        text = read_text(path);
    } catch (const std::exception&) {
        throw ArtifactError("plan file not found: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ArtifactError("plan file " + path.string() + " is not valid JSON: " + e.what());
    }
    return plan_from_json(doc);
}

// Profile the plan was built against, after the model's core cap.
PlatformProfile plan_profile(const RunBundle& b, const EdpuPlan& plan) {
    if (!b.model.empty()) {
        const TransformerConfig cfg = resolve_model(b.model);
        if (!(cfg == plan.model)) throw ArtifactError("plan was built for a different model than " + b.model);
    }
    const PlatformProfile ep = effective_profile(resolve_profile(b.profile), plan.model);
    if (ep.total_aie != plan.total_aie) {
        throw ArtifactError("plan was built for total_aie=" + std::to_string(plan.total_aie) + " but the profile gives " +
                            std::to_string(ep.total_aie));
    }
    return ep;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const PlanningError& e) {
        err << "planning error: " << e.what() << '\n';
        return kConfig;
    } catch (const ArtifactError& e) {
        err << "artifact error: " << e.what() << '\n';
        return kArtifact;
    } catch (const SimulationError& e) {
        err << "plan/workload mismatch: " << e.what() << '\n';
        return kArtifact;
    } catch (const GenerationError& e) {
        err << "graph generation failed: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

DesignOptions design_options(const RunBundle& b) {
    return {b.independent_linear, b.strict_factor1, b.force_pipelined_ffn};
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
    }
    return s + '\n';
}

std::string delta(double reference, double simulated) { return fmt(simulated - reference, "%.6f"); }

}  // namespace

fs::path data_dir() { return CATDSE_DATA_DIR; }

fs::path profile_dir() {
    if (const char* env = std::getenv("CAT_DSE_PROFILE_DIR"); env && *env) return env;
    return data_dir() / "profiles";
}

TransformerConfig resolve_model(const std::string& path_or_name) {
    if (path_or_name.empty()) throw ConfigError("model", "no model given");
    const fs::path path = locate(path_or_name, data_dir() / "models", "model");
    return load_model_config(parse_config_file(path, "model"));
}

PlatformProfile resolve_profile(const std::string& path_or_name) {
    if (path_or_name.empty()) throw ConfigError("profile", "no profile given");
    const fs::path path = locate(path_or_name, profile_dir(), "profile");
    return load_profile(parse_config_file(path, "profile"));
}

std::vector<Count> parse_batches(const std::string& text) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty() || v < 1) throw ConfigError("batches", "bad batch size '" + s + "' in '" + text + "'");
        return static_cast<Count>(v);
    };
    std::vector<Count> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const Count a = number(text.substr(0, dots));
        const Count b = number(text.substr(dots + 2));
        if (b < a) throw ConfigError("batches", "empty range '" + text + "'");
        for (Count i = a; i <= b; ++i) out.push_back(i);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(item));
    if (out.empty()) throw ConfigError("batches", "empty batch list");
    return out;
}

std::string decisions_markdown(const EdpuPlan& plan, const PlatformProfile& ep, bool show_strict) {
    const TransformerConfig& c = plan.model;
    const Count plio = derive_plio_aie(ep);
    const PuSpec* largest = plan.pu_specs.empty() ? nullptr : &plan.pu_specs.front();
    const Count mmsz = largest ? largest->mmsz : 0;
    const Count side = plio * mmsz;
    std::ostringstream os;
    os << "# EDPU design decisions\n\n";
    os << "Model: head=" << c.head << " embed_dim=" << c.embed_dim << " dff=" << c.dff << " seq_len=" << c.seq_len
       << " data_bits=" << c.data_bits << "\n";
    os << "Profile: " << plan.profile_name << " (total_aie=" << ep.total_aie
       << ", total_buffer_bytes=" << ep.total_buffer_bytes << ")\n\n";

    os << "## PU catalog\n\n";
    os << "MMSZ_AIE = " << mmsz << " (largest power of two s with s^2 * " << c.bytes_per_element()
       << " B * 4 <= " << ep.m_window_bytes << " B)\n";
    os << "PLIO_AIE = floor(t_calc / t_window) = floor(" << fmt(ep.t_calc_ns) << " / " << fmt(ep.t_window_ns)
       << ") = " << plio << "\n\n";
    for (const auto& s : plan.pu_specs) {
        os << "- " << s.name() << ": " << s.core_count << " cores, tile " << s.tile.m << "x" << s.tile.k << "x"
           << s.tile.n << ", " << s.in_plio << " in / " << s.out_plio << " out PLIO, block " << s.extent_m() << "x"
           << s.extent_k() << "x" << s.extent_n() << "\n";
    }

    os << "\n## ATB parallelism\n\n";
    if (largest) {
        os << "P_ATB = QKV LB output width / head width = " << largest->extent_n() << " / " << c.head_dim() << " = "
           << plan.p_atb << "\n";
    }

    os << "\n## Factor1\n\n";
    if (largest) {
        const Count n_worked = ep.total_aie / largest->core_count;
        const Count n_strict = ep.total_aie / (plio * plio);
        for (const auto* d : {&plan.mha_decision, &plan.ffn_decision}) {
            const bool mha = d->stage == Stage::Mha;
            const Count last = mha ? c.embed_dim : c.dff;
            os << "Factor1(" << to_string(d->stage) << ") = L*E*" << (mha ? "E" : "Dff")
               << " / (N_max * (PLIO_AIE*MMSZ)^3) = " << c.seq_len << "*" << c.embed_dim << "*" << last << " / ("
               << n_worked << " * " << side << "^3) = " << fmt(d->factor1_worked) << "  [N_max = floor(" << ep.total_aie
               << " / " << largest->core_count << ") = " << n_worked << "]\n";
            if (show_strict) {
                os << "Factor1(" << to_string(d->stage) << ", strict) = " << c.seq_len << "*" << c.embed_dim << "*"
                   << last << " / (" << n_strict << " * " << side << "^3) = " << fmt(d->factor1_strict)
                   << "  [N_max = floor(" << ep.total_aie << " / PLIO_AIE^2) = " << n_strict << "]\n";
            }
        }
    }

    os << "\n## Factor2\n\n";
    const MhaBufferBreakdown bb = mha_buffer_breakdown(c, plan.p_atb);
    const Count d = c.head_dim();
    const Count L = c.seq_len;
    const Count E = c.embed_dim;
    const Count p = plan.p_atb;
    os << "MHA (P_ATB = " << p << ", bytes):\n";
    os << "- QKV outputs 3*L*(d*P_ATB) = 3*" << L << "*" << d * p << " = " << bb.qkv_out << "\n";
    os << "- ATB in/out 4*L*d*P_ATB = 4*" << L << "*" << d << "*" << p << " = " << bb.atb_io << "\n";
    os << "- attention L*L*P_ATB/2 = " << L << "*" << L << "*" << p << "/2 = " << bb.attention << "\n";
    os << "- Proj in/out L*E + L*(d*P_ATB) = " << L * E << " + " << L * d * p << " = " << bb.proj_io << "\n";
    os << "- weights 4*E^2 + 2*E*Dff = " << 4 * E * E << " + " << 2 * E * c.dff << " = " << bb.weights << "\n";
    os << "- Factor2(MHA) = " << plan.mha_decision.factor2_bytes << " B = "
       << fmt(static_cast<double>(plan.mha_decision.factor2_bytes) / 1048576.0) << " MB\n";
    os << "FFN: Factor2(FFN) = 2*E*Dff + L*E + L*Dff + L*E = " << plan.ffn_decision.factor2_bytes << " B = "
       << fmt(static_cast<double>(plan.ffn_decision.factor2_bytes) / 1048576.0) << " MB\n";

    os << "\n## Parallel modes\n\n";
    for (const auto* dd : {&plan.mha_decision, &plan.ffn_decision}) {
        os << "- " << to_string(dd->stage) << ": Factor1 " << fmt(dd->factor1) << (dd->factor1 >= static_cast<double>(dd->max_pipeline_depth) ? " >= " : " < ")
           << "depth " << dd->max_pipeline_depth << ", Factor2 " << dd->factor2_bytes
           << (dd->factor2_bytes > dd->total_buffer_bytes ? " > " : " <= ") << dd->total_buffer_bytes << " -> "
           << to_string(dd->chosen) << " (trigger: " << to_string(dd->triggered_by) << ")\n";
    }
    os << "\nPlanned: PM_MHA = " << to_string(plan.pm_mha) << ", PM_FFN = " << to_string(plan.pm_ffn) << "\n";

    os << "\n## Allocation\n\n";
    os << "| PRG | PU | instances | cores |\n|---|---|---|---|\n";
    for (const auto* group : {&plan.mha_prgs, &plan.ffn_prgs}) {
        for (const auto& prg : *group) {
            os << "| " << prg.id << " | " << to_string(prg.pu_kind) << " | " << prg.pu_instances.size() << " | "
               << plan.cores_of(prg) << " |\n";
        }
    }
    os << "\nDeployed AIEs = " << plan.deployed_aie << " / " << plan.total_aie << " = "
       << fmt(plan.deployment_rate, "%.4f") << "\n";
    if (!plan.notes.empty()) {
        os << "\n## Notes\n\n";
        for (const auto& n : plan.notes) os << "- " << n << "\n";
    }
    return os.str();
}

int cmd_design(const RunBundle& b, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const TransformerConfig cfg = resolve_model(b.model);
        const PlatformProfile profile = resolve_profile(b.profile);
        const EdpuPlan plan = design_edpu(cfg, profile, design_options(b));
        const fs::path dir = prepare_out(b);
        write_text(dir / "plan.json", to_json(plan).dump(2) + "\n");
        write_text(dir / "decisions.md", decisions_markdown(plan, effective_profile(profile, cfg), b.strict_factor1));
        out << "plan: " << (dir / "plan.json").string() << " (" << plan.deployed_aie << "/" << plan.total_aie
            << " AIEs, MHA " << to_string(plan.pm_mha) << ", FFN " << to_string(plan.pm_ffn) << ")\n";
        return int{kOk};
    });
}

int cmd_simulate(const RunBundle& b, const std::vector<Count>& batches, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (batches.empty()) throw ConfigError("batches", "empty batch list");
        const EdpuPlan plan = load_plan(b);
        const PlatformProfile ep = plan_profile(b, plan);
        const Workload w = derive_workload(plan.model, plan.independent_linear);
        const fs::path dir = prepare_out(b);

        std::string csv = "batch,tops,latency_ns,eff_util_avg\n";
        SimReport last;
        for (Count batch : batches) {
            SimConfig sc;
            sc.batch_size = batch;
            sc.record_timeline = b.timeline && batch == batches.back();
            last = simulate(plan, w, ep, sc);
            csv += csv_row({std::to_string(batch), fmt(last.tops, "%.6f"), fmt(last.total_latency_ns, "%.3f"),
                            fmt(last.eff_util_avg, "%.6f")});
        }
        write_text(dir / "report.json", to_json(last).dump(2) + "\n");
        write_text(dir / "sweep.csv", csv);
        if (b.timeline) write_text(dir / "timeline.csv", timeline_csv(last));
        out << "report: batch " << last.batch_size << ", " << fmt(last.total_latency_ns / 1e3, "%.3f") << " us, "
            << fmt(last.tops, "%.3f") << " TOPS, eff_util_avg " << fmt(last.eff_util_avg, "%.4f") << "\n";
        return int{kOk};
    });
}

int cmd_codegen(const RunBundle& b, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const EdpuPlan plan = load_plan(b);
        const PlatformProfile ep = plan_profile(b, plan);
        const GraphDescription g = emit_graph(plan, ep);
        const fs::path dir = prepare_out(b);
        write_text(dir / "edpu.graph.json", to_json(g).dump(2) + "\n");
        write_text(dir / "edpu.graph", to_text(g));
        const GraphValidation v = validate_graph(g, ep);
        if (!v.ok) {
            for (const auto& msg : v.violations) err << "violation: " << msg << '\n';
            return int{kValidation};
        }
        out << "graph: " << g.kernels.size() << " kernels, " << g.plios.size() << " PLIOs\n";
        return int{kOk};
    });
}

int cmd_table(const RunBundle& b, const std::string& which, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const PlatformProfile profile = resolve_profile(b.profile);
        std::string csv;
        if (which == "table2") {
            const TransformerConfig cfg = resolve_model(b.model.empty() ? "vit-base" : b.model);
            const ModeComparison cmp = compare_modes(cfg, profile);
            const double reference[] = {1.0, 3.8, 5.3, 14.6, 20.1};
            csv = "lab,independent_linear,atb_mode,atb_parallelism,reference_speedup,simulated_speedup,delta,latency_ns\n";
            for (const auto& r : cmp.rows) {
                const double ref = reference[r.lab - 1];
                csv += csv_row({std::to_string(r.lab), r.independent_linear ? "yes" : "no", r.atb_mode,
                                std::to_string(r.atb_parallelism), fmt(ref), fmt(r.speedup, "%.4f"),
                                delta(ref, r.speedup), fmt(r.latency_ns, "%.1f")});
            }
        } else if (which == "table5" || which == "table6") {
            struct Ref {
                const char* model;
                double dep, mha, ffn, avg;
                double lat[3], tops[3];
            };
            const Ref refs[] = {
                {"bert-base", 0.88, 1.0, 0.73, 0.87, {0.037, 0.081, 0.118}, {40.237, 29.846, 35.194}},
                {"vit-base", 0.88, 1.0, 0.73, 0.87, {0.049, 0.081, 0.129}, {30.450, 29.846, 30.279}},
                {"bert-base-limited", 1.0, 1.0, 1.0, 1.0, {0.147, 0.252, 0.398}, {9.607, 9.595, 9.598}},
            };
            csv = "model,module,metric,reference,simulated,delta\n";
            for (const auto& ref : refs) {
                const TransformerConfig cfg = resolve_model(ref.model);
                const EdpuPlan plan = design_edpu(cfg, profile, design_options(b));
                const PlatformProfile ep = effective_profile(profile, cfg);
                SimConfig sc;
                sc.batch_size = kTableBatch;
                const SimReport r = simulate(plan, derive_workload(cfg, plan.independent_linear), ep, sc);
                auto row = [&](const char* module, const char* metric, double reference, double simulated) {
                    csv += csv_row({ref.model, module, metric, fmt(reference), fmt(simulated, "%.6f"),
                                    delta(reference, simulated)});
                };
                if (which == "table5") {
                    row("Overall", "aie_deployment_rate", ref.dep, r.deployment_rate);
                    row("MHA", "aie_eff_util", ref.mha, r.eff_util_mha);
                    row("FFN", "aie_eff_util", ref.ffn, r.eff_util_ffn);
                    row("Overall", "aie_eff_util_avg_simple", ref.avg, r.eff_util_avg);
                    row("Overall", "aie_eff_util_avg_weighted", ref.avg, r.eff_util_weighted);
                } else {
                    const double b16 = static_cast<double>(kTableBatch);
                    const double lat[] = {r.mha_latency_ns / b16 / 1e6, r.ffn_latency_ns / b16 / 1e6,
                                          r.total_latency_ns / b16 / 1e6};
                    const double tops[] = {r.mha_tops, r.ffn_tops, r.tops};
                    const char* modules[] = {"MHA", "FFN", "System"};
                    for (int i = 0; i < 3; ++i) {
                        row(modules[i], "latency_ms_per_item", ref.lat[i], lat[i]);
                        row(modules[i], "tops", ref.tops[i], tops[i]);
                    }
                    row("System", "gops_per_aie", ref.tops[2] * 1e3 / (ref.dep * static_cast<double>(plan.total_aie)),
                        r.gops_per_aie);
                    row("System", "identity_gops_per_aie_x_deployed_minus_tops", 0.0,
                        r.gops_per_aie * static_cast<double>(r.deployed_aie) / 1e3 - r.tops);
                }
            }
        } else {
            throw ConfigError("table", "unknown table '" + which + "' (expected table2, table5 or table6)");
        }
        const fs::path dir = prepare_out(b);
        write_text(dir / (which + ".csv"), csv);
        out << csv;
        return int{kOk};
    });
}

}  // namespace catdse::cli
