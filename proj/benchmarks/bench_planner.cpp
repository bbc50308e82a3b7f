#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "catdse/codegen.hpp"
#include "catdse/planner.hpp"
#include "catdse/simulator.hpp"

using namespace catdse;

namespace {

TransformerConfig model(const std::string& name) {
    std::ifstream in(std::string(CATDSE_DATA_DIR) + "/models/" + name + ".json");
    std::ostringstream os;
    os << in.rdbuf();
    return load_model_config(nlohmann::json::parse(os.str()));
}

const char* kModels[] = {"bert-base", "vit-base", "bert-base-limited"};

void BM_DesignEdpu(benchmark::State& st) {
    const TransformerConfig cfg = model(kModels[st.range(0)]);
    for (auto _ : st) benchmark::DoNotOptimize(design_edpu(cfg, vck5000_default()));
    st.SetLabel(kModels[st.range(0)]);
}
BENCHMARK(BM_DesignEdpu)->DenseRange(0, 2);

void BM_Simulate(benchmark::State& st) {
    const TransformerConfig cfg = model("bert-base");
    const EdpuPlan plan = design_edpu(cfg, vck5000_default());
    const Workload w = derive_workload(cfg, plan.independent_linear);
    SimConfig sc;
    sc.batch_size = st.range(0);
    for (auto _ : st) benchmark::DoNotOptimize(simulate(plan, w, vck5000_default(), sc));
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(16)->Arg(32);

void BM_SimulateTimeline(benchmark::State& st) {
    const TransformerConfig cfg = model("bert-base");
    const EdpuPlan plan = design_edpu(cfg, vck5000_default());
    const Workload w = derive_workload(cfg, plan.independent_linear);
    SimConfig sc;
    sc.batch_size = 16;
    sc.record_timeline = true;
    for (auto _ : st) benchmark::DoNotOptimize(simulate(plan, w, vck5000_default(), sc));
}
BENCHMARK(BM_SimulateTimeline);

void BM_EmitGraph(benchmark::State& st) {
    const EdpuPlan plan = design_edpu(model("bert-base"), vck5000_default());
    for (auto _ : st) benchmark::DoNotOptimize(emit_graph(plan, vck5000_default()));
}
BENCHMARK(BM_EmitGraph);

void BM_ValidateGraph(benchmark::State& st) {
    const GraphDescription g = emit_graph(design_edpu(model("bert-base"), vck5000_default()), vck5000_default());
    for (auto _ : st) benchmark::DoNotOptimize(validate_graph(g, vck5000_default()));
}
BENCHMARK(BM_ValidateGraph);

void BM_CompareModes(benchmark::State& st) {
    const TransformerConfig cfg = model("vit-base");
    for (auto _ : st) benchmark::DoNotOptimize(compare_modes(cfg, vck5000_default()));
}
BENCHMARK(BM_CompareModes);

}  // namespace
BENCHMARK_MAIN();
