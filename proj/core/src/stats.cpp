#include "driftbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace driftbench {

int poisson_sample(double lambda, Rng& rng) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("poisson_sample: lambda must be finite and >= 0");
    }
    if (lambda == 0.0) return 0;
    // Knuth's product method for small lambda; larger lambdas are split in
    // half and summed (Poisson additivity), keeping the method exact.
    if (lambda > 30.0) {
        return poisson_sample(lambda / 2.0, rng) + poisson_sample(lambda / 2.0, rng);
    }
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_double();
    } while (p > limit);
    return k - 1;
}

double hoeffding_bound(double range_r, double delta, std::size_t n) {
    if (!(range_r > 0.0) || !std::isfinite(range_r)) {
        throw std::invalid_argument("hoeffding_bound: range_r must be finite and > 0");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("hoeffding_bound: delta must lie in (0,1)");
    }
    if (n == 0) {
        throw std::invalid_argument("hoeffding_bound: n must be >= 1");
    }
    return std::sqrt(range_r * range_r * std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

namespace {

// Asymptotic survival function of the Kolmogorov distribution,
// P(D > d) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        if (term < 1e-12) break;
        sum += sign * term;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Exact P(D >= d) for small samples via lattice-path counting: count monotone
// paths from (0,0) to (na,nb) that keep |i/na - j/nb| < d, divide by C(na+nb,na).
double ks_exact_sf(std::size_t na, std::size_t nb, double d) {
    const double target = d * static_cast<double>(na) * static_cast<double>(nb) - 1e-7;
    std::vector<double> col(nb + 1, 0.0);
    col[0] = 1.0;
    for (std::size_t j = 1; j <= nb; ++j) {
        col[j] = (static_cast<double>(j * na) < target) ? col[j - 1] : 0.0;
    }
    for (std::size_t i = 1; i <= na; ++i) {
        std::vector<double> next(nb + 1, 0.0);
        for (std::size_t j = 0; j <= nb; ++j) {
            const double gap = std::abs(static_cast<double>(i) * static_cast<double>(nb) -
                                        static_cast<double>(j) * static_cast<double>(na));
            if (gap >= target) continue;
            next[j] = col[j] + (j > 0 ? next[j - 1] : 0.0);
        }
        col = std::move(next);
    }
    double total = 1.0;
    for (std::size_t k = 1; k <= nb; ++k) {
        total *= static_cast<double>(na + k) / static_cast<double>(k);
    }
    return std::clamp(1.0 - col[nb] / total, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_two_sample: both samples must be non-empty");
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    const auto na = static_cast<double>(sa.size());
    const auto nb = static_cast<double>(sb.size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double d = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        const double v = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= v) ++ia;
        while (ib < sb.size() && sb[ib] <= v) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }

    KsResult r;
    r.d_stat = d;
    r.n_a = sa.size();
    r.n_b = sb.size();
    if (d <= 0.0) {
        r.p_value = 1.0;
    } else if (sa.size() * sb.size() <= 10'000) {
        r.p_value = ks_exact_sf(std::min(sa.size(), sb.size()),
                                std::max(sa.size(), sb.size()), d);
    } else {
        const double ne = na * nb / (na + nb);
        const double lambda = d * (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne));
        r.p_value = kolmogorov_sf(lambda);
    }
    return r;
}

double ks_p_value(double d_stat, double n_eff_a, double n_eff_b) {
    if (!(n_eff_a > 0.0) || !(n_eff_b > 0.0)) {
        throw std::invalid_argument("ks_p_value: effective sizes must be positive");
    }
    if (!(d_stat >= 0.0 && d_stat <= 1.0)) {
        throw std::invalid_argument("ks_p_value: d_stat must lie in [0,1]");
    }
    if (d_stat == 0.0) return 1.0;
    const double ne = n_eff_a * n_eff_b / (n_eff_a + n_eff_b);
    const double lambda = d_stat * (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne));
    return kolmogorov_sf(lambda);
}

bool ks_reject(std::span<const double> a, std::span<const double> b, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("ks_reject: alpha must lie in (0,1)");
    }
    return ks_two_sample(a, b).p_value < alpha;
}

}  // namespace driftbench
