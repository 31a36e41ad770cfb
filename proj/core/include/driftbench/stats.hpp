#ifndef DRIFTBENCH_STATS_HPP
#define DRIFTBENCH_STATS_HPP

#include <cstddef>
#include <span>

#include "driftbench/rng.hpp"

namespace driftbench {

struct KsResult {
    double d_stat = 0.0;
    double p_value = 1.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

// Poisson(lambda) sample. lambda == 0 always yields 0.
// Throws std::invalid_argument for negative or non-finite lambda.
int poisson_sample(double lambda, Rng& rng);

// epsilon = sqrt(range_r^2 * ln(1/delta) / (2n)).
// Throws std::invalid_argument when delta is outside (0,1) or n == 0.
double hoeffding_bound(double range_r, double delta, std::size_t n);

// Exact two-sample D statistic over the merged sample (ECDF gaps evaluated
// at each distinct value, so ties are handled), p-value from the asymptotic
// Kolmogorov series with the small-sample correction
// lambda = d * (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)), n_e = n_a*n_b/(n_a+n_b).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// P(D > d) for two samples with the given effective sizes, via the corrected
// asymptotic series. Used when the samples are internally correlated and the
// nominal counts overstate the information they carry.
// Throws std::invalid_argument for non-positive sizes or d outside [0,1].
double ks_p_value(double d_stat, double n_eff_a, double n_eff_b);

// true iff the two-sample KS p-value is below alpha.
bool ks_reject(std::span<const double> a, std::span<const double> b, double alpha);

}  // namespace driftbench

#endif  // DRIFTBENCH_STATS_HPP
