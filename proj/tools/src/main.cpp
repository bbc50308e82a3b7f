#include <iostream>

#include <CLI11.hpp>

#include "catdse/errors.hpp"
#include "catdse_cli/cli.hpp"

namespace cli = catdse::cli;

int main(int argc, char** argv) {
    CLI::App app{"cat-dse: EDPU design-space exploration and analytical simulation"};
    app.require_subcommand(1);

    cli::RunBundle bundle;
    std::string batches = "1..32";
    std::string plan_path;
    std::string which;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--model", bundle.model, "model config path or builtin name (bert-base, vit-base, bert-base-limited)");
        sub->add_option("--profile", bundle.profile, "platform profile path or builtin name")->capture_default_str();
        sub->add_flag("--independent-linear,!--no-independent-linear", bundle.independent_linear,
                      "independent Q/K/V linear layers (default on)");
        sub->add_flag("--strict-factor1", bundle.strict_factor1, "decide with the literal N_max = Total_AIE / PLIO_AIE^2");
        sub->add_flag("--force-pipelined-ffn,--paper-ffn-override", bundle.force_pipelined_ffn,
                      "pipeline the FFN stage whatever the mode rule says");
        sub->add_option("--out", bundle.out, "output directory")->capture_default_str();
    };

    auto* design = app.add_subcommand("design", "plan an EDPU: plan.json + decisions.md");
    common(design);
    auto* simulate = app.add_subcommand("simulate", "simulate a plan: report.json + sweep.csv");
    common(simulate);
    simulate->add_option("--plan", plan_path, "plan file (default <out>/plan.json)");
    simulate->add_option("--batches", batches, "batch sizes: a..b, a,b,c or n")->capture_default_str();
    simulate->add_flag("--timeline", bundle.timeline, "also write timeline.csv for the last batch size");
    auto* codegen = app.add_subcommand("codegen", "emit the dataflow graph: edpu.graph.json + edpu.graph");
    common(codegen);
    codegen->add_option("--plan", plan_path, "plan file (default <out>/plan.json)");
    auto* table = app.add_subcommand("table", "reproduction tables as CSV");
    common(table);
    table->add_option("which", which, "table2, table5 or table6")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kConfig;
    }
    if (!plan_path.empty()) bundle.plan = plan_path;

    if (design->parsed()) return cli::cmd_design(bundle, std::cout, std::cerr);
    if (simulate->parsed()) {
        std::vector<catdse::Count> list;
        try {
            list = cli::parse_batches(batches);
        } catch (const catdse::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return cli::kConfig;
        }
        return cli::cmd_simulate(bundle, list, std::cout, std::cerr);
    }
    if (codegen->parsed()) return cli::cmd_codegen(bundle, std::cout, std::cerr);
    return cli::cmd_table(bundle, which, std::cout, std::cerr);
}
