#include <benchmark/benchmark.h>

#include "driftbench/disagreement.hpp"
#include "driftbench/ensemble.hpp"
#include "driftbench/stream.hpp"

using namespace driftbench;

namespace {

std::vector<Instance> sea_batch(std::size_t n, std::uint64_t seed) {
    auto spec = fixture_stream("sea0", DriftKind::Abrupt, n, 0, seed);
    return materialize(spec);
}

EnsembleConfig ht_config(int members) {
    EnsembleConfig cfg;
    cfg.kind = LearnerKind::HoeffdingTreeLearner;
    cfg.n_members = members;
    cfg.input_dim = 3;
    return cfg;
}

void bm_hoeffding_tree_learn(benchmark::State& state) {
    const auto batch = sea_batch(5000, 7);
    for (auto _ : state) {
        HoeffdingTree tree{HtParams{}};
        for (const auto& inst : batch) tree.learn(inst.x, inst.y);
        benchmark::DoNotOptimize(tree.node_count());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(bm_hoeffding_tree_learn);

void bm_hoeffding_tree_predict(benchmark::State& state) {
    const auto batch = sea_batch(5000, 7);
    HoeffdingTree tree{HtParams{}};
    for (const auto& inst : batch) tree.learn(inst.x, inst.y);
    for (auto _ : state) {
        int acc = 0;
        for (const auto& inst : batch) acc += tree.predict(inst.x);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(bm_hoeffding_tree_predict);

void bm_ensemble_clone(benchmark::State& state) {
    const auto batch = sea_batch(2000, 7);
    Ensemble ens(ht_config(static_cast<int>(state.range(0))), Rng(42));
    for (const auto& inst : batch) ens.learn(inst.x, inst.y);
    for (auto _ : state) {
        Ensemble copy = ens;
        benchmark::DoNotOptimize(copy.n_members());
    }
}
BENCHMARK(bm_ensemble_clone)->Arg(10)->Arg(100);

void bm_pairwise_disagreement(benchmark::State& state) {
    const auto batch = sea_batch(1000, 7);
    Ensemble ens(ht_config(static_cast<int>(state.range(0))), Rng(42));
    for (const auto& inst : batch) ens.learn(inst.x, inst.y);
    std::vector<std::vector<double>> window;
    for (const auto& inst : batch) window.push_back(inst.x);
    for (auto _ : state) {
        auto dists = pairwise_disagreement(ens, window);
        benchmark::DoNotOptimize(dists.data());
    }
}
BENCHMARK(bm_pairwise_disagreement)->Arg(25)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
