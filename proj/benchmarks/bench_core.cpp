#include <benchmark/benchmark.h>

#include <numeric>

#include "doetree/classic.hpp"
#include "doetree/datasets.hpp"
#include "doetree/glm.hpp"
#include "doetree/sim.hpp"
#include "doetree/tree.hpp"

using namespace doetree;

static void BM_SaturatedOls(benchmark::State& state) {
    Dataset wafer = wafer_reconstruction().data;
    Matrix x = effect_matrix(wafer, all_terms(4));
    for (auto _ : state) benchmark::DoNotOptimize(ols_fit(x, wafer.y()));
}
BENCHMARK(BM_SaturatedOls);

static void BM_IrlsLogistic(benchmark::State& state) {
    auto seed = seed_germination();
    std::vector<Term> terms = {Term{}, Term{0}, Term{1}, Term{2}, Term{1, 2}};
    DummyMatrix dm = dummy_matrix(seed.data, terms);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            irls_fit(dm.x, seed.data.y(), seed.data.trials(), Family::binomial()));
}
BENCHMARK(BM_IrlsLogistic);

static void BM_StepwiseAic(benchmark::State& state) {
    Dataset wafer = wafer_reconstruction().data;
    for (auto _ : state) benchmark::DoNotOptimize(stepwise_aic(wafer));
}
BENCHMARK(BM_StepwiseAic);

static void BM_GrowTree(benchmark::State& state) {
    Dataset wafer = wafer_reconstruction().data;
    TreeConfig cfg;
    cfg.kind = static_cast<NodeModelKind>(state.range(0));
    cfg.seed = 11;
    for (auto _ : state) benchmark::DoNotOptimize(grow_tree(wafer, cfg));
}
BENCHMARK(BM_GrowTree)->Arg(0)->Arg(1)->Arg(3);  // constant, best-simple, stepwise

static void BM_CvSelect(benchmark::State& state) {
    Dataset wafer = wafer_reconstruction().data;
    TreeConfig cfg;
    cfg.kind = NodeModelKind::best_simple;
    cfg.seed = 11;
    for (auto _ : state) benchmark::DoNotOptimize(cv_select(wafer, cfg, 10, 17));
}
BENCHMARK(BM_CvSelect);

static void BM_PmseTrialGuideSimple(benchmark::State& state) {
    SimDesign d{4, 6};
    long trials = 4;
    std::uint64_t seed = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            run_pmse(SimMethod::guide_simple, SimModelKind::hier, d, trials, seed++));
    state.SetItemsProcessed(state.iterations() * trials);
}
BENCHMARK(BM_PmseTrialGuideSimple);

BENCHMARK_MAIN();
