#include "driftbench/d3.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace driftbench {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("auc: scores and labels must align");
    }
    std::size_t n_pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
        n_pos += static_cast<std::size_t>(l);
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("auc: both classes must be present");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mid-ranks over tie groups, then the Mann-Whitney statistic.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) rank_sum_pos += mid_rank;
        }
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

D3Detector::D3Detector(Params p) : params_(p) {
    if (params_.window == 0 || params_.rho <= 0.0) {
        throw std::invalid_argument("d3: window and rho must be positive");
    }
}

std::size_t D3Detector::new_size() const {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(params_.rho * static_cast<double>(params_.window))));
}

void D3Detector::reset() {
    buffer_.clear();
    dim_ = 0;
}

double D3Detector::discriminator_auc() const {
    const std::size_t n = buffer_.size();
    const std::size_t n_new = new_size();
    const std::size_t d = dim_;

    // Standardize over the whole buffer so the logistic fit is scale-free.
    std::vector<double> mean(d, 0.0);
    std::vector<double> var(d, 0.0);
    for (const auto& x : buffer_) {
        for (std::size_t f = 0; f < d; ++f) mean[f] += x[f];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& x : buffer_) {
        for (std::size_t f = 0; f < d; ++f) {
            var[f] += (x[f] - mean[f]) * (x[f] - mean[f]);
        }
    }
    std::vector<double> sd(d);
    for (std::size_t f = 0; f < d; ++f) {
        sd[f] = var[f] > 1e-12 ? std::sqrt(var[f] / static_cast<double>(n)) : 1.0;
    }

    std::vector<std::vector<double>> z(n, std::vector<double>(d));
    std::vector<int> label(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) z[i][f] = (buffer_[i][f] - mean[f]) / sd[f];
        label[i] = i >= n - n_new ? 1 : 0;  // newest slice is the positive class
    }

    // Zero-initialized logistic regression, full passes until convergence.
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    for (int epoch = 0; epoch < params_.max_epochs; ++epoch) {
        double max_step = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double logit = b;
            for (std::size_t f = 0; f < d; ++f) logit += w[f] * z[i][f];
            const double p = 1.0 / (1.0 + std::exp(-logit));
            const double g = p - static_cast<double>(label[i]);
            for (std::size_t f = 0; f < d; ++f) {
                const double step = params_.learning_rate * g * z[i][f];
                w[f] -= step;
                max_step = std::max(max_step, std::abs(step));
            }
            b -= params_.learning_rate * g;
        }
        if (max_step < 1e-6) break;
    }

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double logit = b;
        for (std::size_t f = 0; f < d; ++f) logit += w[f] * z[i][f];
        scores[i] = logit;
    }
    return auc(scores, label);
}

DetectorStatus D3Detector::update(const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("d3: non-finite feature");
    }
    if (dim_ == 0) {
        dim_ = x.size();
    } else if (x.size() != dim_) {
        throw std::invalid_argument("d3: feature dimension mismatch");
    }
    buffer_.push_back(x);
    if (buffer_.size() < capacity()) return DetectorStatus::InControl;

    const std::size_t n_new = new_size();
    if (discriminator_auc() > params_.auc_threshold) {
        // Drop the old window, keep the new slice as the seed of the next one.
        while (buffer_.size() > n_new) buffer_.pop_front();
        return DetectorStatus::Drift;
    }
    // Slide: discard the oldest rho*w elements.
    for (std::size_t i = 0; i < n_new && !buffer_.empty(); ++i) buffer_.pop_front();
    return DetectorStatus::InControl;
}

}  // namespace driftbench
