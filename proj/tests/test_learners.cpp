#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "driftbench/ensemble.hpp"
#include "driftbench/stats.hpp"
#include "driftbench/hoeffding_tree.hpp"
#include "driftbench/mlp.hpp"
#include "driftbench/stream.hpp"

using namespace driftbench;

namespace {

std::vector<Instance> sea_sample(std::size_t n, std::uint64_t seed) {
    auto spec = fixture_stream("sea0", DriftKind::Abrupt, n, 0, seed);
    return materialize(spec);
}

// f0 alone determines the label; f1 and f2 are noise.
std::vector<Instance> decisive_feature_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Instance> out(n);
    for (auto& inst : out) {
        inst.x = {rng.next_double() * 10.0, rng.next_double() * 10.0,
                  rng.next_double() * 10.0};
        inst.y = inst.x[0] > 5.0;
    }
    return out;
}

double holdout_accuracy(const auto& model, const std::vector<Instance>& data) {
    std::size_t hits = 0;
    for (const auto& inst : data) hits += model.predict(inst.x) == inst.y;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("hoeffding tree: untrained tree predicts the uniform prior") {
    HoeffdingTree tree;
    const auto p = tree.predict_proba({1.0, 2.0, 3.0});
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
}

TEST_CASE("hoeffding tree: pure leaf after a decisive split") {
    HoeffdingTree tree;
    const auto data = decisive_feature_sample(2'000, 3);
    for (const auto& inst : data) tree.learn(inst.x, inst.y);
    REQUIRE(tree.node_count() >= 3);
    REQUIRE(tree.root_split_feature() == 0);
    const auto p = tree.predict_proba({1.0, 5.0, 5.0});
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);
    CHECK(tree.predict({1.0, 5.0, 5.0}) == 0);
    CHECK(tree.predict({9.0, 5.0, 5.0}) == 1);
}

TEST_CASE("hoeffding tree: no split inside the grace period") {
    HoeffdingTree tree;
    const auto data = decisive_feature_sample(199, 4);
    for (const auto& inst : data) tree.learn(inst.x, inst.y);
    CHECK(tree.node_count() == 1);
}

TEST_CASE("hoeffding tree: separable feature splits once the bound allows") {
    // With G(best)-G(second) near 1 and epsilon(n=200) ~ 0.2007, the split
    // fires at the first grace-period check.
    HoeffdingTree tree;
    const auto data = decisive_feature_sample(200, 5);
    for (const auto& inst : data) tree.learn(inst.x, inst.y);
    CHECK(tree.node_count() >= 3);
}

TEST_CASE("hoeffding tree: uninformative features do not split early") {
    HoeffdingTree tree;
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        tree.learn({rng.next_double(), rng.next_double(), rng.next_double()}, i % 2);
    }
    CHECK(tree.node_count() == 1);
}

TEST_CASE("hoeffding tree: first split uses the decisive feature in 99 of 100 runs") {
    int correct = 0;
    for (int run = 0; run < 100; ++run) {
        HoeffdingTree tree;
        const auto data = decisive_feature_sample(1'000, 1'000 + static_cast<std::uint64_t>(run));
        for (const auto& inst : data) {
            tree.learn(inst.x, inst.y);
            if (tree.node_count() > 1) break;
        }
        correct += tree.node_count() > 1 && tree.root_split_feature() == 0;
    }
    CHECK(correct >= 99);
}

TEST_CASE("hoeffding tree: stationary SEA holdout accuracy at least 0.90") {
    HoeffdingTree tree;
    for (const auto& inst : sea_sample(10'000, 21)) tree.learn(inst.x, inst.y);
    CHECK(holdout_accuracy(tree, sea_sample(2'000, 22)) >= 0.90);
}

TEST_CASE("hoeffding tree: node count never decreases on a stationary stream") {
    HoeffdingTree tree;
    std::size_t last = 1;
    for (const auto& inst : sea_sample(20'000, 23)) {
        tree.learn(inst.x, inst.y);
        REQUIRE(tree.node_count() >= last);
        last = tree.node_count();
    }
    CHECK(last > 1);
}

TEST_CASE("hoeffding tree: serialization round trip predicts identically") {
    HoeffdingTree tree;
    for (const auto& inst : sea_sample(5'000, 24)) tree.learn(inst.x, inst.y);
    auto copy = HoeffdingTree::deserialize(tree.serialize());
    for (const auto& inst : sea_sample(500, 25)) {
        REQUIRE(copy.predict_proba(inst.x) == tree.predict_proba(inst.x));
    }
    CHECK(copy.serialize() == tree.serialize());
}

TEST_CASE("mlp: zero-initialized output layer predicts exactly one half") {
    Rng rng(1);
    Mlp mlp(3, MlpParams{}, rng);
    CHECK(mlp.predict_proba1({0.3, -2.0, 11.0}) == 0.5);
    CHECK(mlp.predict_proba1({5.0, 5.0, 5.0}) == 0.5);
}

TEST_CASE("mlp: analytic gradient matches central finite differences") {
    Rng rng(8);
    MlpParams params;
    params.hidden = 8;
    params.standardize = false;
    Mlp mlp(3, params, rng);
    // Nudge weights off the zero-output init so gradients are generic.
    Rng data_rng(9);
    for (int i = 0; i < 20; ++i) {
        mlp.learn({data_rng.next_gaussian(), data_rng.next_gaussian(), data_rng.next_gaussian()},
                  i % 2);
    }
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 3; ++i) {
        xs.push_back({data_rng.next_gaussian(), data_rng.next_gaussian(), data_rng.next_gaussian()});
        ys.push_back(i % 2);
    }
    std::vector<double> analytic(mlp.flatten_weights().size(), 0.0);
    for (int i = 0; i < 3; ++i) {
        const auto g = mlp.gradient(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]);
        for (std::size_t k = 0; k < g.size(); ++k) analytic[k] += g[k];
    }
    const auto w0 = mlp.flatten_weights();
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t k = 0; k < w0.size(); ++k) {
        auto wp = w0;
        wp[k] += h;
        mlp.set_weights(wp);
        double lp = 0.0;
        for (int i = 0; i < 3; ++i) lp += mlp.loss(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]);
        wp[k] = w0[k] - h;
        mlp.set_weights(wp);
        double lm = 0.0;
        for (int i = 0; i < 3; ++i) lm += mlp.loss(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]);
        mlp.set_weights(w0);
        const double numeric = (lp - lm) / (2.0 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic[k]) / scale);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("mlp: stationary SEA holdout accuracy at least 0.90") {
    Rng rng(12);
    Mlp mlp(3, MlpParams{}, rng);
    for (const auto& inst : sea_sample(10'000, 26)) mlp.learn(inst.x, inst.y);
    CHECK(holdout_accuracy(mlp, sea_sample(2'000, 27)) >= 0.90);
}

TEST_CASE("mlp: serialization round trip predicts identically") {
    Rng rng(13);
    Mlp mlp(3, MlpParams{}, rng);
    for (const auto& inst : sea_sample(2'000, 28)) mlp.learn(inst.x, inst.y);
    auto copy = Mlp::deserialize(mlp.serialize());
    for (const auto& inst : sea_sample(200, 29)) {
        REQUIRE(copy.predict_proba1(inst.x) == mlp.predict_proba1(inst.x));
    }
}

namespace {

EnsembleConfig small_ht_config(int members) {
    EnsembleConfig cfg;
    cfg.kind = LearnerKind::HoeffdingTreeLearner;
    cfg.n_members = members;
    cfg.input_dim = 3;
    return cfg;
}

}  // namespace

TEST_CASE("ensemble: epsilon is 1 before any evidence") {
    Ensemble ens(small_ht_config(5), Rng(1));
    CHECK(ens.epsilon() == 1.0);
    CHECK(ens.effective_lambda() == 6.0);
}

TEST_CASE("ensemble: prequential error window arithmetic") {
    Ensemble ens(small_ht_config(5), Rng(2));
    // Untrained trees vote 0, so y=0 scores a hit and y=1 a miss.
    ens.observe({1, 1, 1}, 0);
    ens.observe({1, 1, 1}, 0);
    CHECK(ens.epsilon() == 0.0);
    ens.observe({1, 1, 1}, 1);
    ens.observe({1, 1, 1}, 1);
    CHECK(ens.epsilon() == 0.5);
    CHECK(ens.effective_lambda() == 3.0);
    for (int i = 0; i < 4; ++i) ens.observe({1, 1, 1}, 1);
    CHECK(ens.epsilon() == 0.75);
}

TEST_CASE("ensemble: all-wrong window saturates epsilon") {
    Ensemble ens(small_ht_config(5), Rng(3));
    for (int i = 0; i < 50; ++i) ens.observe({1, 1, 1}, 1);
    CHECK(ens.epsilon() == 1.0);
}

TEST_CASE("ensemble: zero epsilon with zero floor trains nobody") {
    auto cfg = small_ht_config(5);
    cfg.lambda_floor = 0.0;
    Ensemble ens(cfg, Rng(4));
    for (int i = 0; i < 100; ++i) ens.observe({1, 1, 1}, 0);
    REQUIRE(ens.epsilon() == 0.0);
    const auto before = ens.serialize();
    for (const auto& inst : sea_sample(500, 30)) ens.learn(inst.x, inst.y);
    CHECK(ens.serialize() == before);
}

TEST_CASE("ensemble: mean training copies track epsilon times lambda_max") {
    // poisson_sample draws at lambda = eps * 6 for eps in {0.25, 0.5, 0.75, 1}.
    for (double eps : {0.25, 0.5, 0.75, 1.0}) {
        Rng rng(static_cast<std::uint64_t>(eps * 1000));
        double sum = 0.0;
        const int n = 100'000;
        for (int i = 0; i < n; ++i) sum += poisson_sample(eps * 6.0, rng);
        CHECK(std::abs(sum / n - eps * 6.0) <= 0.05);
    }
}

TEST_CASE("ensemble: tie vote resolves to class 0") {
    Ensemble ens(small_ht_config(2), Rng(5));
    const std::vector<double> probe{5.0, 5.0, 5.0};
    for (int i = 0; i < 1'000; ++i) {
        ens.learn_member(0, probe, 0);
        ens.learn_member(1, probe, 1);
        ens.learn_member(0, {4.0, 6.0, 1.0}, 0);
        ens.learn_member(1, {4.0, 6.0, 1.0}, 1);
    }
    REQUIRE(ens.member_predict(0, probe) == 0);
    REQUIRE(ens.member_predict(1, probe) == 1);
    CHECK(ens.vote_fraction(probe) == 0.5);
    CHECK(ens.predict(probe) == 0);
}

TEST_CASE("ensemble: unanimous members give vote fraction 0 or 1") {
    Ensemble ens(small_ht_config(7), Rng(6));
    CHECK(ens.vote_fraction({1.0, 2.0, 3.0}) == 0.0);
}

TEST_CASE("ensemble: clone isolation") {
    Ensemble ens(small_ht_config(10), Rng(7));
    for (const auto& inst : sea_sample(2'000, 31)) {
        ens.observe(inst.x, inst.y);
        ens.learn(inst.x, inst.y);
    }
    const auto probe = sea_sample(300, 32);
    std::vector<int> before;
    for (const auto& inst : probe) before.push_back(ens.predict(inst.x));
    const auto frozen = ens.serialize();

    Ensemble clone = ens;
    for (const auto& inst : sea_sample(1'000, 33)) {
        clone.observe(inst.x, 1 - inst.y);
        clone.learn(inst.x, 1 - inst.y);
    }
    CHECK(ens.serialize() == frozen);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        REQUIRE(ens.predict(probe[i].x) == before[i]);
    }
}

TEST_CASE("ensemble: clone of an untrained ensemble predicts identically") {
    Ensemble ens(small_ht_config(10), Rng(8));
    Ensemble clone = ens;
    for (const auto& inst : sea_sample(200, 34)) {
        REQUIRE(clone.predict(inst.x) == ens.predict(inst.x));
    }
}

TEST_CASE("ensemble: accuracy at least best member minus 0.02 on SEA") {
    EnsembleConfig cfg = small_ht_config(100);
    Ensemble ens(cfg, Rng(9));
    for (const auto& inst : sea_sample(10'000, 35)) {
        ens.observe(inst.x, inst.y);
        ens.learn(inst.x, inst.y);
    }
    const auto held = sea_sample(2'000, 36);
    double best_member = 0.0;
    for (int m = 0; m < ens.n_members(); ++m) {
        std::size_t hits = 0;
        for (const auto& inst : held) hits += ens.member_predict(m, inst.x) == inst.y;
        best_member = std::max(best_member, hits / static_cast<double>(held.size()));
    }
    std::size_t hits = 0;
    for (const auto& inst : held) hits += ens.predict(inst.x) == inst.y;
    const double ensemble_acc = hits / static_cast<double>(held.size());
    CHECK(ensemble_acc >= best_member - 0.02);
}

TEST_CASE("ensemble: reset_all restores single-node trees and clears the window") {
    Ensemble ens(small_ht_config(8), Rng(10));
    for (const auto& inst : sea_sample(3'000, 37)) {
        ens.observe(inst.x, inst.y);
        ens.learn(inst.x, inst.y);
    }
    ens.reset_all();
    CHECK(ens.epsilon() == 1.0);
    for (int m = 0; m < ens.n_members(); ++m) {
        CHECK(std::get<HoeffdingTree>(ens.member(m)).node_count() == 1);
    }
}

TEST_CASE("ensemble: mlp members reset to fresh predictors") {
    EnsembleConfig cfg;
    cfg.kind = LearnerKind::MlpLearner;
    cfg.n_members = 4;
    cfg.input_dim = 3;
    Ensemble ens(cfg, Rng(11));
    for (const auto& inst : sea_sample(1'000, 38)) {
        ens.observe(inst.x, inst.y);
        ens.learn(inst.x, inst.y);
    }
    ens.reset_member(2);
    CHECK(std::get<Mlp>(ens.member(2)).predict_proba1({1.0, 2.0, 3.0}) == 0.5);
}

TEST_CASE("ensemble: config validation") {
    auto cfg = small_ht_config(0);
    CHECK_THROWS_AS(Ensemble(cfg, Rng(1)), std::invalid_argument);
    cfg = small_ht_config(3);
    cfg.lambda_max = 0.0;
    CHECK_THROWS_AS(Ensemble(cfg, Rng(1)), std::invalid_argument);
}
