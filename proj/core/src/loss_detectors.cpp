#include "driftbench/loss_detectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftbench {

// --- DDM ----------------------------------------------------------------------

void Ddm::reset() {
    n_ = 0.0;
    p_ = 0.0;
    min_p_ = 0.0;
    min_s_ = 0.0;
    min_sum_ = std::numeric_limits<double>::infinity();
}

DetectorStatus Ddm::update(double error) {
    n_ += 1.0;
    p_ += (error - p_) / n_;
    const double s = std::sqrt(std::max(0.0, p_ * (1.0 - p_)) / n_);
    if (n_ < params_.min_instances) return DetectorStatus::InControl;

    if (p_ + s <= min_sum_) {
        min_p_ = p_;
        min_s_ = s;
        min_sum_ = p_ + s;
    }
    if (p_ + s > min_p_ + params_.drift_level * min_s_) {
        reset();
        return DetectorStatus::Drift;
    }
    if (p_ + s > min_p_ + params_.warning_level * min_s_) return DetectorStatus::Warning;
    return DetectorStatus::InControl;
}

// --- EDDM ---------------------------------------------------------------------

void Eddm::reset() {
    step_ = 0;
    last_error_ = -1;
    n_errors_ = 0.0;
    mean_ = 0.0;
    m2_ = 0.0;
    max_m2s_ = 0.0;
}

DetectorStatus Eddm::update(double error) {
    ++step_;
    if (error < 0.5) return DetectorStatus::InControl;

    if (last_error_ >= 0) {
        const double distance = static_cast<double>(step_ - last_error_);
        n_errors_ += 1.0;
        const double d = distance - mean_;
        mean_ += d / n_errors_;
        m2_ += d * (distance - mean_);
    }
    last_error_ = step_;
    if (n_errors_ < params_.min_errors) return DetectorStatus::InControl;

    const double sd = std::sqrt(std::max(0.0, m2_ / n_errors_));
    const double m2s = mean_ + 2.0 * sd;
    if (m2s > max_m2s_) {
        max_m2s_ = m2s;
        return DetectorStatus::InControl;
    }
    const double ratio = m2s / max_m2s_;
    if (ratio < params_.beta) {
        reset();
        return DetectorStatus::Drift;
    }
    if (ratio < params_.alpha) return DetectorStatus::Warning;
    return DetectorStatus::InControl;
}

// --- Page-Hinkley --------------------------------------------------------------

void PageHinkley::reset() {
    n_ = 0.0;
    mean_ = 0.0;
    m_ = 0.0;
    m_min_ = 0.0;
}

DetectorStatus PageHinkley::update(double value) {
    n_ += 1.0;
    mean_ += (value - mean_) / n_;
    m_ += value - mean_ - params_.delta;
    m_min_ = std::min(m_min_, m_);
    if (n_ < params_.min_instances) return DetectorStatus::InControl;
    if (m_ - m_min_ > params_.lambda) {
        reset();
        return DetectorStatus::Drift;
    }
    return DetectorStatus::InControl;
}

// --- ADWIN ----------------------------------------------------------------------

void Adwin::reset() {
    rows_.clear();
    width_ = 0;
    total_ = 0.0;
    var_sum_ = 0.0;
    ticks_ = 0;
}

double Adwin::variance() const {
    return width_ > 0 ? var_sum_ / static_cast<double>(width_) : 0.0;
}

void Adwin::insert(double value) {
    if (rows_.empty()) rows_.emplace_back();
    if (width_ > 0) {
        const double mean = total_ / static_cast<double>(width_);
        var_sum_ += static_cast<double>(width_) / (static_cast<double>(width_) + 1.0) *
                    (value - mean) * (value - mean);
    }
    rows_[0].buckets.push_back(Bucket{value, 0.0});
    ++width_;
    total_ += value;
    compress();
}

void Adwin::compress() {
    for (std::size_t level = 0; level < rows_.size(); ++level) {
        if (rows_[level].buckets.size() <= static_cast<std::size_t>(params_.max_buckets) + 1) {
            continue;
        }
        if (level + 1 >= rows_.size()) rows_.emplace_back();
        const double n = std::pow(2.0, static_cast<double>(level));
        Bucket a = rows_[level].buckets.front();
        rows_[level].buckets.pop_front();
        Bucket b = rows_[level].buckets.front();
        rows_[level].buckets.pop_front();
        const double mean_a = a.total / n;
        const double mean_b = b.total / n;
        Bucket merged;
        merged.total = a.total + b.total;
        merged.variance = a.variance + b.variance + n * n / (2.0 * n) * (mean_a - mean_b) * (mean_a - mean_b);
        rows_[level + 1].buckets.push_back(merged);
    }
}

void Adwin::drop_oldest_bucket() {
    // The oldest bucket lives at the highest non-empty level.
    for (std::size_t level = rows_.size(); level-- > 0;) {
        if (rows_[level].buckets.empty()) continue;
        const Bucket b = rows_[level].buckets.front();
        rows_[level].buckets.pop_front();
        const double n = std::pow(2.0, static_cast<double>(level));
        width_ -= static_cast<std::size_t>(n);
        total_ -= b.total;
        const double mean_b = b.total / n;
        double incr = 0.0;
        if (width_ > 0) {
            const double mean_rest = total_ / static_cast<double>(width_);
            incr = n * static_cast<double>(width_) / (n + static_cast<double>(width_)) *
                   (mean_b - mean_rest) * (mean_b - mean_rest);
        }
        var_sum_ -= b.variance + incr;
        var_sum_ = std::max(0.0, var_sum_);
        return;
    }
}

double Adwin::cut_threshold(double n0, double n1, double total_var, double n, double delta) {
    const double delta_prime = delta / n;
    const double m = 1.0 / n0 + 1.0 / n1;
    const double ln_term = std::log(2.0 / delta_prime);
    return std::sqrt(2.0 * m * total_var * ln_term) + 2.0 / 3.0 * m * ln_term;
}

bool Adwin::try_cut() {
    bool cut_any = false;
    bool reduced = true;
    while (reduced && width_ >= params_.min_window) {
        reduced = false;
        // Walk boundaries from oldest to newest, accumulating the old side.
        double n0 = 0.0;
        double sum0 = 0.0;
        const double v = variance();
        for (std::size_t level = rows_.size(); level-- > 0;) {
            const double bucket_n = std::pow(2.0, static_cast<double>(level));
            for (const Bucket& b : rows_[level].buckets) {
                n0 += bucket_n;
                sum0 += b.total;
                const double n1 = static_cast<double>(width_) - n0;
                if (n0 < static_cast<double>(params_.min_sub_window) ||
                    n1 < static_cast<double>(params_.min_sub_window)) {
                    continue;
                }
                const double mean0 = sum0 / n0;
                const double mean1 = (total_ - sum0) / n1;
                const double eps = cut_threshold(n0, n1, v, static_cast<double>(width_),
                                                 params_.delta);
                if (std::abs(mean0 - mean1) > eps) {
                    drop_oldest_bucket();
                    cut_any = true;
                    reduced = true;
                    break;
                }
            }
            if (reduced) break;
        }
    }
    return cut_any;
}

DetectorStatus Adwin::update(double value) {
    if (value < 0.0 || value > 1.0) {
        throw std::invalid_argument("adwin: value must lie in [0,1]");
    }
    insert(value);
    ++ticks_;
    if (ticks_ % params_.clock != 0 || width_ < params_.min_window) {
        return DetectorStatus::InControl;
    }
    if (try_cut()) {
        reset();
        return DetectorStatus::Drift;
    }
    return DetectorStatus::InControl;
}

// --- HDDM_A ---------------------------------------------------------------------

void HddmA::reset() {
    n_ = 0.0;
    sum_ = 0.0;
    min_n_ = 0.0;
    min_sum_ = 0.0;
    min_mean_plus_eps_ = std::numeric_limits<double>::infinity();
}

DetectorStatus HddmA::update(double error) {
    n_ += 1.0;
    sum_ += error;
    const double mean = sum_ / n_;
    const double eps_rec = std::sqrt(std::log(1.0 / params_.alpha_drift) / (2.0 * n_));
    if (mean + eps_rec < min_mean_plus_eps_) {
        min_mean_plus_eps_ = mean + eps_rec;
        min_n_ = n_;
        min_sum_ = sum_;
    }
    if (n_ < params_.min_instances) return DetectorStatus::InControl;

    const double m = n_ - min_n_;
    if (m < 1.0 || min_n_ < 1.0) return DetectorStatus::InControl;
    const double mean_rest = (sum_ - min_sum_) / m;
    const double min_mean = min_sum_ / min_n_;
    const double diff = mean_rest - min_mean;
    auto bound = [&](double alpha) {
        return std::sqrt(0.5 * (1.0 / min_n_ + 1.0 / m) * std::log(1.0 / alpha));
    };
    if (diff > bound(params_.alpha_drift)) {
        reset();
        return DetectorStatus::Drift;
    }
    if (diff > bound(params_.alpha_warning)) return DetectorStatus::Warning;
    return DetectorStatus::InControl;
}

// --- HDDM_W ---------------------------------------------------------------------

void HddmW::reset() {
    n_ = 0.0;
    ewma_ = 0.0;
    wsum_ = 0.0;
    wsq_ = 0.0;
    min_mean_ = 0.0;
    min_bv_ = 0.0;
    min_score_ = std::numeric_limits<double>::infinity();
    has_min_ = false;
}

DetectorStatus HddmW::update(double error) {
    n_ += 1.0;
    const double lam = params_.lambda;
    ewma_ = (1.0 - lam) * ewma_ + lam * error;
    wsum_ = (1.0 - lam) * wsum_ + lam;
    wsq_ = (1.0 - lam) * (1.0 - lam) * wsq_ + lam * lam;
    const double mean = ewma_ / wsum_;
    const double bv = wsq_ / (wsum_ * wsum_);  // sum of squared normalized weights
    const double eps_rec = std::sqrt(bv * std::log(1.0 / params_.alpha_drift) / 2.0);
    if (mean + eps_rec < min_score_) {
        min_score_ = mean + eps_rec;
        min_mean_ = mean;
        min_bv_ = bv;
        has_min_ = true;
    }
    if (n_ < params_.min_instances || !has_min_) return DetectorStatus::InControl;

    const double diff = mean - min_mean_;
    auto bound = [&](double alpha) {
        return std::sqrt((min_bv_ + bv) * std::log(1.0 / alpha) / 2.0);
    };
    if (diff > bound(params_.alpha_drift)) {
        reset();
        return DetectorStatus::Drift;
    }
    if (diff > bound(params_.alpha_warning)) return DetectorStatus::Warning;
    return DetectorStatus::InControl;
}

// --- dispatch --------------------------------------------------------------------

DetectorStatus detector_update(LossDetector& detector, double error) {
    if (!(error >= 0.0 && error <= 1.0)) {
        throw std::invalid_argument("detector_update: error must lie in [0,1]");
    }
    return std::visit([&](auto& d) { return d.update(error); }, detector);
}

void detector_reset(LossDetector& detector) {
    std::visit([](auto& d) { d.reset(); }, detector);
}

}  // namespace driftbench
