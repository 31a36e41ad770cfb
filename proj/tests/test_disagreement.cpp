#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "driftbench/disagreement.hpp"
#include "driftbench/stream.hpp"

using namespace driftbench;

namespace {

EnsembleConfig ht_cfg(int members) {
    EnsembleConfig cfg;
    cfg.kind = LearnerKind::HoeffdingTreeLearner;
    cfg.n_members = members;
    cfg.input_dim = 3;
    return cfg;
}

EnsembleConfig mlp_cfg(int members) {
    EnsembleConfig cfg;
    cfg.kind = LearnerKind::MlpLearner;
    cfg.n_members = members;
    cfg.input_dim = 3;
    return cfg;
}

std::vector<Instance> sea(std::size_t n, std::uint64_t seed, const char* name = "sea0") {
    return materialize(fixture_stream(name, DriftKind::Abrupt, n, 0, seed));
}

std::vector<std::vector<double>> features(const std::vector<Instance>& data) {
    std::vector<std::vector<double>> out;
    out.reserve(data.size());
    for (const auto& inst : data) out.push_back(inst.x);
    return out;
}

Ensemble warmed_ensemble(const EnsembleConfig& cfg, std::size_t n, std::uint64_t seed) {
    Ensemble ens(cfg, Rng(seed));
    for (const auto& inst : sea(n, seed + 1)) {
        ens.observe(inst.x, inst.y);
        ens.learn(inst.x, inst.y);
    }
    return ens;
}

std::string member_state(const Ensemble& ens, int m) {
    return std::visit([](const auto& l) { return l.serialize(); }, ens.member(m));
}

}  // namespace

TEST_CASE("pseudo labels equal the ensemble majority vote") {
    auto ens = warmed_ensemble(ht_cfg(9), 3'000, 41);
    const auto window = features(sea(500, 43));
    const auto labels = pseudo_label(ens, window);
    REQUIRE(labels.size() == window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        REQUIRE(labels[i] == ens.predict(window[i]));
    }
}

TEST_CASE("pseudo labels on a tied untrained ensemble are class 0") {
    Ensemble ens(ht_cfg(2), Rng(5));
    const auto window = features(sea(100, 44));
    for (int l : pseudo_label(ens, window)) REQUIRE(l == 0);
}

TEST_CASE("pseudo-label agreement tracks ensemble accuracy on stationary data") {
    auto ens = warmed_ensemble(ht_cfg(15), 5'000, 45);
    const auto held = sea(1'000, 46);
    const auto labels = pseudo_label(ens, features(held));
    std::size_t agree = 0, acc = 0;
    for (std::size_t i = 0; i < held.size(); ++i) {
        agree += labels[i] == held[i].y;
        acc += ens.predict(held[i].x) == held[i].y;
    }
    const double agreement = agree / static_cast<double>(held.size());
    const double accuracy = acc / static_cast<double>(held.size());
    CHECK(agreement >= accuracy - 0.01);
    CHECK(accuracy >= 0.80);  // warmed ensemble is actually competent
}

TEST_CASE("flip_assign: exact count and determinism") {
    const auto mask = flip_assign(100, 0.5, Rng(7));
    CHECK(std::accumulate(mask.begin(), mask.end(), 0) == 50);
    CHECK(flip_assign(100, 0.5, Rng(7)) == mask);
    const auto small = flip_assign(10, 0.3, Rng(8));
    CHECK(std::accumulate(small.begin(), small.end(), 0) == 3);
}

TEST_CASE("flip_assign: members are flipped uniformly across batches") {
    std::vector<int> flips(100, 0);
    const int batches = 1'000;
    Rng root(9);
    for (int b = 0; b < batches; ++b) {
        const auto mask = flip_assign(100, 0.5, root.split(static_cast<std::uint64_t>(b)));
        for (int m = 0; m < 100; ++m) flips[static_cast<std::size_t>(m)] += mask[static_cast<std::size_t>(m)];
    }
    for (int m = 0; m < 100; ++m) {
        const double rate = flips[static_cast<std::size_t>(m)] / static_cast<double>(batches);
        REQUIRE(rate >= 0.45);
        REQUIRE(rate <= 0.55);
    }
}

TEST_CASE("flip_assign: fraction bounds enforced") {
    CHECK_THROWS_AS(flip_assign(10, 0.0, Rng(1)), std::invalid_argument);
    CHECK_THROWS_AS(flip_assign(10, 1.0, Rng(1)), std::invalid_argument);
}

TEST_CASE("train_flipped_copy: empty window is a no-op") {
    auto ens = warmed_ensemble(ht_cfg(6), 2'000, 47);
    const std::vector<std::vector<double>> empty_window;
    const std::vector<int> empty_labels;
    const std::vector<std::uint8_t> mask(6, 0);
    auto copy = train_flipped_copy(ens, empty_window, empty_labels, mask);
    CHECK(copy.serialize() == ens.serialize());
}

TEST_CASE("train_flipped_copy: flipping member m leaves the others byte-identical") {
    auto ens = warmed_ensemble(ht_cfg(6), 2'000, 48);
    const auto held = sea(300, 49);
    const auto window = features(held);
    const auto labels = pseudo_label(ens, window);
    std::vector<std::uint8_t> none(6, 0);
    std::vector<std::uint8_t> only3(6, 0);
    only3[3] = 1;
    const auto base = train_flipped_copy(ens, window, labels, none);
    const auto flipped = train_flipped_copy(ens, window, labels, only3);
    for (int m = 0; m < 6; ++m) {
        if (m == 3) continue;
        REQUIRE(member_state(base, m) == member_state(flipped, m));
    }
    CHECK(member_state(base, 3) != member_state(flipped, 3));
    // And the original is untouched either way.
    CHECK(member_state(ens, 3) != member_state(base, 3));
}

TEST_CASE("train_flipped_copy: opposed masks produce opposed critics") {
    auto ens = warmed_ensemble(ht_cfg(8), 600, 50);
    const auto window = features(sea(3'000, 51));
    const auto labels = pseudo_label(ens, window);
    const std::vector<std::uint8_t> all0(8, 0);
    const std::vector<std::uint8_t> all1(8, 1);
    const auto g0 = train_flipped_copy(ens, window, labels, all0);
    const auto g1 = train_flipped_copy(ens, window, labels, all1);
    // Cross-copy disagreement: fraction of the window where g0 and g1 differ.
    double cross = 0.0;
    for (const auto& x : window) cross += g0.predict(x) != g1.predict(x);
    cross /= static_cast<double>(window.size());
    auto internal_mean = [&](const Ensemble& g) {
        const auto d = pairwise_disagreement(g, window);
        return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    };
    CHECK(cross > internal_mean(g0));
    CHECK(cross > internal_mean(g1));
}

TEST_CASE("pairwise_disagreement: identical members give all zeros") {
    Ensemble ens(ht_cfg(10), Rng(11));
    const auto probe = sea(200, 52);
    std::vector<std::vector<double>> window = features(probe);
    // Train every member on the same data without resampling noise.
    for (const auto& inst : probe) {
        for (int m = 0; m < 10; ++m) ens.learn_member(m, inst.x, inst.y);
    }
    for (double d : pairwise_disagreement(ens, window)) REQUIRE(d == 0.0);
}

TEST_CASE("pairwise_disagreement: opposite constant members disagree everywhere") {
    Ensemble ens(ht_cfg(2), Rng(12));
    for (int i = 0; i < 500; ++i) {
        ens.learn_member(0, {1.0, 2.0, 3.0}, 0);
        ens.learn_member(1, {1.0, 2.0, 3.0}, 1);
    }
    const auto window = features(sea(100, 53));
    const auto d = pairwise_disagreement(ens, window);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == 1.0);
}

TEST_CASE("pairwise_disagreement: 100 members yield 4950 values in [0,1]") {
    Ensemble ens(ht_cfg(100), Rng(13));
    const auto window = features(sea(50, 54));
    const auto d = pairwise_disagreement(ens, window);
    REQUIRE(d.size() == 4'950);
    for (double v : d) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        // Every value is an integer multiple of 1/|window|.
        const double scaled = v * 50.0;
        REQUIRE(std::abs(scaled - std::round(scaled)) < 1e-9);
    }
}

TEST_CASE("detector: identical Q and R windows give d_stat 0 and no drift") {
    auto ens = warmed_ensemble(ht_cfg(10), 3'000, 55);
    const auto half = features(sea(500, 56));
    std::vector<std::vector<double>> batch = half;
    batch.insert(batch.end(), half.begin(), half.end());
    DisagreementConfig cfg;
    DisagreementDetector det(std::move(ens), cfg, 99);
    const auto decision = det.step(batch);
    CHECK(decision.d_stat == 0.0);
    CHECK_FALSE(decision.drift);
}

TEST_CASE("detector: stationary stream stays in control") {
    auto ens = warmed_ensemble(ht_cfg(10), 3'000, 57);
    DisagreementConfig cfg;
    DisagreementDetector det(std::move(ens), cfg, 100);
    int drifts = 0;
    int batches = 0;
    for (const auto& inst : sea(50'000, 58)) {
        if (auto d = det.push(inst.x)) {
            drifts += d->drift;
            ++batches;
        }
    }
    REQUIRE(batches == 50);
    CHECK(drifts <= 1);  // rate at most 2 * alpha over 50 batches
}

TEST_CASE("detector: abrupt drift inside R is caught by an MLP ensemble") {
    // Labeled harness protocol: the ensemble trains prequentially on true
    // labels while the detector pseudo-labels each arrival. Tuned detector:
    // sliding 500-instance windows (stride 125) so evaluations straddle the
    // drift at every phase, including mid-R. Power comes from the adaptation
    // transient: pseudo-labels recorded just after the drift are churned
    // while the ensemble re-fits, which separates D_Q from D_R.
    int detected = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const auto seed = 8'000 + static_cast<std::uint64_t>(t) * 3;
        auto spec = fixture_stream("sea1", DriftKind::Abrupt, 5'000, 1, seed);
        spec.drift.positions = {4'250};
        const auto data = materialize(spec);
        auto cfg = mlp_cfg(25);
        cfg.mlp.learning_rate = 0.005;
        Ensemble ens(cfg, Rng(seed + 1));
        DisagreementConfig dcfg;
        dcfg.batch_size = 500;
        dcfg.q_size = 250;
        dcfg.stride = 125;
        dcfg.alpha = 0.05;
        dcfg.null_replicates = 99;
        dcfg.self_train = false;
        DisagreementDetector det(std::move(ens), dcfg, seed + 2);
        bool hit = false;
        for (const auto& inst : data) {
            const auto decision = det.push(inst.x);
            det.ensemble().observe(inst.x, inst.y);
            det.ensemble().learn(inst.x, inst.y);
            if (decision && decision->drift && inst.index >= 4'250) {
                hit = true;
                break;
            }
        }
        detected += hit;
    }
    CHECK(detected >= 80);
}

TEST_CASE("detector: stride slides the window instead of tumbling") {
    auto ens = warmed_ensemble(ht_cfg(8), 2'000, 81);
    DisagreementConfig cfg;
    cfg.batch_size = 1'000;
    cfg.stride = 250;
    DisagreementDetector det(std::move(ens), cfg, 82);
    std::size_t decisions = 0;
    std::vector<std::size_t> at;
    const auto data = sea(2'500, 83);
    for (const auto& inst : data) {
        if (det.push(inst.x)) {
            ++decisions;
            at.push_back(inst.index);
        }
    }
    // First decision after 1000 instances, then one every 250.
    CHECK(at == std::vector<std::size_t>{999, 1'249, 1'499, 1'749, 1'999, 2'249, 2'499});
    CHECK(decisions == 7);
}

TEST_CASE("detector: sliding self-training absorbs each instance once") {
    // With stride < batch_size the overlap must not be re-absorbed; the
    // detector state after k decisions equals sequential pseudo-label
    // training on each instance exactly once.
    const auto data = sea(1'500, 84);
    auto ens = warmed_ensemble(ht_cfg(6), 2'000, 85);
    Ensemble expected = ens;

    DisagreementConfig cfg;
    cfg.batch_size = 1'000;
    cfg.stride = 250;
    DisagreementDetector det(std::move(ens), cfg, 86);

    // Replica of the protocol: pseudo-label at arrival, absorb only the
    // instances that entered since the previous decision.
    std::vector<int> labels;
    std::size_t absorbed = 0, seen = 0;
    for (const auto& inst : data) {
        labels.push_back(expected.predict(inst.x));
        ++seen;
        const auto decision = det.push(inst.x);
        if (!decision) continue;
        REQUIRE_FALSE(decision->drift);
        for (; absorbed < seen; ++absorbed) {
            expected.observe(data[absorbed].x, labels[absorbed]);
            expected.learn(data[absorbed].x, labels[absorbed]);
        }
    }
    CHECK(det.ensemble().serialize() == expected.serialize());
}

TEST_CASE("detector: cooldown suppresses decisions after an alarm") {
    // One trial of the power scenario, which reliably alarms; after each
    // alarm the window clears, `cooldown` instances are skipped, and a full
    // batch must refill before the next decision.
    const std::uint64_t seed = 8'000;
    auto spec = fixture_stream("sea1", DriftKind::Abrupt, 5'000, 1, seed);
    spec.drift.positions = {4'250};
    const auto data = materialize(spec);
    auto ecfg = mlp_cfg(25);
    ecfg.mlp.learning_rate = 0.005;
    Ensemble ens(ecfg, Rng(seed + 1));
    DisagreementConfig cfg;
    cfg.batch_size = 500;
    cfg.q_size = 250;
    cfg.stride = 125;
    cfg.alpha = 0.05;
    cfg.null_replicates = 99;
    cfg.self_train = false;
    cfg.cooldown = 1'000;
    DisagreementDetector det(std::move(ens), cfg, seed + 2);
    std::vector<std::size_t> decision_at;
    std::vector<bool> fired;
    for (const auto& inst : data) {
        const auto d = det.push(inst.x);
        det.ensemble().observe(inst.x, inst.y);
        det.ensemble().learn(inst.x, inst.y);
        if (d) {
            decision_at.push_back(inst.index);
            fired.push_back(d->drift);
        }
    }
    REQUIRE(std::count(fired.begin(), fired.end(), true) >= 1);
    for (std::size_t i = 0; i + 1 < decision_at.size(); ++i) {
        const std::size_t gap = decision_at[i + 1] - decision_at[i];
        if (fired[i]) {
            REQUIRE(gap == cfg.cooldown + cfg.batch_size);
        } else {
            REQUIRE(gap == cfg.stride);
        }
    }
}

TEST_CASE("detector: full-run determinism") {
    auto run_once = [] {
        auto ens = warmed_ensemble(ht_cfg(8), 2'000, 59);
        DisagreementConfig cfg;
        DisagreementDetector det(std::move(ens), cfg, 60);
        std::vector<DriftDecision> decisions;
        for (const auto& inst : sea(10'000, 61)) {
            if (auto d = det.push(inst.x)) decisions.push_back(*d);
        }
        return decisions;
    };
    const auto a = run_once();
    const auto b = run_once();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].drift == b[i].drift);
        REQUIRE(a[i].d_stat == b[i].d_stat);
        REQUIRE(a[i].p_value == b[i].p_value);
    }
}

TEST_CASE("detector: self-training absorbs exactly one pseudo-labeled batch") {
    auto ens = warmed_ensemble(ht_cfg(6), 2'000, 62);
    const auto batch = features(sea(1'000, 63));
    const auto labels = pseudo_label(ens, batch);

    Ensemble expected = ens;  // replay what step() should do on no-drift
    DisagreementConfig cfg;
    DisagreementDetector det(std::move(ens), cfg, 64);
    const auto decision = det.step(batch);
    REQUIRE_FALSE(decision.drift);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        expected.observe(batch[i], labels[i]);
        expected.learn(batch[i], labels[i]);
    }
    CHECK(det.ensemble().serialize() == expected.serialize());
}

TEST_CASE("detector: finish handles a short tail") {
    auto make = [](std::uint64_t seed) {
        auto ens = warmed_ensemble(ht_cfg(6), 1'000, seed);
        return DisagreementDetector(std::move(ens), DisagreementConfig{}, seed + 1);
    };
    auto det = make(65);
    for (const auto& inst : sea(200, 66)) det.push(inst.x);
    const auto tail = det.finish();
    REQUIRE(tail.has_value());  // 200 >= 2 * min_window
    auto det2 = make(67);
    for (const auto& inst : sea(60, 68)) det2.push(inst.x);
    CHECK_FALSE(det2.finish().has_value());  // below the floor: discarded
}

TEST_CASE("config validation") {
    DisagreementConfig cfg;
    cfg.q_size = cfg.batch_size;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = DisagreementConfig{};
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = DisagreementConfig{};
    cfg.q_size = 20;  // below min_window
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("adapt: reset_all returns every tree to a single node") {
    auto ens = warmed_ensemble(ht_cfg(8), 4'000, 69);
    DisagreementConfig cfg;
    cfg.adapt_policy = AdaptPolicy::ResetAll;
    DisagreementDetector det(std::move(ens), cfg, 72);
    // Empty batch: pure policy application, no warm-start material.
    det.adapt({}, {});
    for (int m = 0; m < det.ensemble().n_members(); ++m) {
        CHECK(std::get<HoeffdingTree>(det.ensemble().member(m)).node_count() == 1);
    }
}

TEST_CASE("adapt: reset_fraction reinitializes exactly half the members") {
    Ensemble ens(ht_cfg(8), Rng(73));
    // Train every member on the full sample so each tree is guaranteed to split.
    for (const auto& inst : sea(4'000, 74)) {
        for (int m = 0; m < 8; ++m) ens.learn_member(m, inst.x, inst.y);
    }
    for (int m = 0; m < 8; ++m) {
        REQUIRE(std::get<HoeffdingTree>(ens.member(m)).node_count() > 1);
    }
    DisagreementConfig cfg;
    cfg.adapt_policy = AdaptPolicy::ResetFraction;
    cfg.reset_fraction = 0.5;
    DisagreementDetector det(std::move(ens), cfg, 74);
    det.adapt({}, {});
    int fresh = 0;
    for (int m = 0; m < det.ensemble().n_members(); ++m) {
        fresh += std::get<HoeffdingTree>(det.ensemble().member(m)).node_count() == 1;
    }
    CHECK(fresh == 4);
}

TEST_CASE("adapt: none leaves the ensemble untouched") {
    auto ens = warmed_ensemble(ht_cfg(6), 2'000, 75);
    const auto frozen = ens.serialize();
    DisagreementConfig cfg;
    cfg.adapt_policy = AdaptPolicy::None;
    DisagreementDetector det(std::move(ens), cfg, 76);
    det.adapt({}, {});
    CHECK(det.ensemble().serialize() == frozen);
}

TEST_CASE("adapt: recovery after drift beats no adaptation") {
    // Train on sea0's first concept, switch to a far-away threshold, and
    // compare prequential accuracy with and without an ensemble reset.
    auto post = materialize(fixture_stream("sea1", DriftKind::Abrupt, 10'000, 1, 77));
    post.erase(post.begin(), post.begin() + 5'000);  // keep the theta=13 half

    auto run = [&](bool reset) {
        auto ens = warmed_ensemble(ht_cfg(10), 8'000, 78);
        if (reset) ens.reset_all();
        std::size_t hits = 0;
        for (const auto& inst : post) {
            hits += ens.predict(inst.x) == inst.y;
            ens.observe(inst.x, inst.y);
            ens.learn(inst.x, inst.y);
        }
        return hits / static_cast<double>(post.size());
    };
    CHECK(run(true) >= run(false) + 0.03);
}
