#include <cmath>
#include <vector>

#include <doctest.h>

#include "driftbench/d3.hpp"
#include "driftbench/rng.hpp"

using namespace driftbench;

TEST_CASE("auc: perfectly separated scores") {
    CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auc(std::vector<double>{0.8, 0.9, 0.1, 0.2}, std::vector<int>{0, 0, 1, 1}) == 0.0);
}

TEST_CASE("auc: all-tied scores give one half") {
    CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}) == 0.5);
}

TEST_CASE("auc: textbook four-point example") {
    CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
}

TEST_CASE("auc: invariant under strictly increasing transforms") {
    Rng rng(3);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        scores.push_back(rng.next_gaussian());
        labels.push_back(static_cast<int>(rng.next_below(2)));
    }
    const double base = auc(scores, labels);
    for (auto& s : scores) s = std::atan(2.0 * s) + 10.0;
    CHECK(auc(scores, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auc: requires both classes") {
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("d3: in control until the buffer fills") {
    D3Detector det;
    Rng rng(4);
    const std::size_t cap = 100 + 10;  // w(1 + rho) at defaults
    for (std::size_t i = 0; i + 1 < cap; ++i) {
        REQUIRE(det.update({rng.next_gaussian(), rng.next_gaussian()}) ==
                DetectorStatus::InControl);
    }
    CHECK(det.buffered() == cap - 1);
}

TEST_CASE("d3: buffer never exceeds its capacity") {
    D3Detector det;
    Rng rng(5);
    for (int i = 0; i < 2'000; ++i) {
        det.update({rng.next_gaussian(), rng.next_gaussian()});
        REQUIRE(det.buffered() <= 110);
    }
}

TEST_CASE("d3: false-drift rate under a stationary stream") {
    int drifts = 0;
    int evaluations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        D3Detector det;
        Rng rng(600 + static_cast<std::uint64_t>(trial));
        for (int i = 0; i < 330; ++i) {
            evaluations += det.buffered() == 109;  // this insert fills the buffer
            if (det.update({rng.next_gaussian(), rng.next_gaussian()}) ==
                DetectorStatus::Drift) {
                ++drifts;
            }
        }
    }
    REQUIRE(evaluations > 0);
    CHECK(static_cast<double>(drifts) / evaluations <= 0.05);
}

TEST_CASE("d3: detects a clean mean shift on first evaluation") {
    int detected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        D3Detector det;
        Rng rng(700 + static_cast<std::uint64_t>(trial));
        // Old window: N(0,1)^2; new slice: N(3,1)^2.
        DetectorStatus st = DetectorStatus::InControl;
        for (int i = 0; i < 100; ++i) {
            st = det.update({rng.next_gaussian(), rng.next_gaussian()});
            REQUIRE(st == DetectorStatus::InControl);
        }
        for (int i = 0; i < 10; ++i) {
            st = det.update({3.0 + rng.next_gaussian(), 3.0 + rng.next_gaussian()});
        }
        detected += st == DetectorStatus::Drift;
    }
    CHECK(detected >= 99);
}

TEST_CASE("d3: reset empties the buffer") {
    D3Detector det;
    Rng rng(8);
    for (int i = 0; i < 50; ++i) det.update({rng.next_gaussian()});
    REQUIRE(det.buffered() == 50);
    det.reset();
    CHECK(det.buffered() == 0);
}

TEST_CASE("d3: parameter validation") {
    D3Detector::Params p;
    p.rho = 0.0;
    CHECK_THROWS_AS(D3Detector{p}, std::invalid_argument);
    p = D3Detector::Params{};
    p.window = 0;
    CHECK_THROWS_AS(D3Detector{p}, std::invalid_argument);
}
