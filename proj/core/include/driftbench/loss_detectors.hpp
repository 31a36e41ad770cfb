#ifndef DRIFTBENCH_LOSS_DETECTORS_HPP
#define DRIFTBENCH_LOSS_DETECTORS_HPP

#include <cstddef>
#include <deque>
#include <limits>
#include <variant>
#include <vector>

namespace driftbench {

enum class DetectorStatus { InControl, Warning, Drift };

// --- DDM (Gama et al. 2004) --------------------------------------------------
// Monitors the running error rate p and its deviation s = sqrt(p(1-p)/n);
// warning when p+s > p_min + 2 s_min, drift at 3 s_min. Resets after drift.
class Ddm {
public:
    struct Params {
        int min_instances = 30;
        double warning_level = 2.0;
        double drift_level = 3.0;
    };
    Ddm() { reset(); }
    explicit Ddm(Params p) : params_(p) { reset(); }
    DetectorStatus update(double error);
    void reset();
    [[nodiscard]] const Params& params() const { return params_; }

private:
    Params params_;
    double n_ = 0.0;
    double p_ = 0.0;
    double min_p_ = 0.0;
    double min_s_ = 0.0;
    double min_sum_ = 0.0;
};

// --- EDDM (Baena-Garcia et al. 2006) ------------------------------------------
// Monitors the distance between consecutive errors; warning when
// (m + 2s) / max(m + 2s) < alpha, drift when < beta.
class Eddm {
public:
    struct Params {
        double alpha = 0.95;
        double beta = 0.90;
        int min_errors = 30;
    };
    Eddm() { reset(); }
    explicit Eddm(Params p) : params_(p) { reset(); }
    DetectorStatus update(double error);
    void reset();

private:
    Params params_;
    long long step_ = 0;
    long long last_error_ = -1;
    double n_errors_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double max_m2s_ = 0.0;
};

// --- Page-Hinkley (increase direction) ----------------------------------------
// Cumulative m_t = sum(x_i - mean_i - delta); alarm when m_t - min m_t > lambda.
class PageHinkley {
public:
    struct Params {
        double delta = 0.005;
        double lambda = 50.0;
        int min_instances = 30;
    };
    PageHinkley() { reset(); }
    explicit PageHinkley(Params p) : params_(p) { reset(); }
    DetectorStatus update(double value);
    void reset();
    [[nodiscard]] double cumulative() const { return m_; }

private:
    Params params_;
    double n_ = 0.0;
    double mean_ = 0.0;
    double m_ = 0.0;
    double m_min_ = 0.0;
};

// --- ADWIN (Bifet & Gavalda 2007) ---------------------------------------------
// Adaptive window over the error stream, stored as an exponential bucket
// histogram (max_buckets per level). Every `clock` insertions the window is
// checked for a cut: sub-window means differing by more than eps_cut shrink
// the window from the old end. Returns Drift on any shrink.
class Adwin {
public:
    struct Params {
        double delta = 0.002;
        int max_buckets = 5;
        int clock = 32;
        std::size_t min_window = 10;
        std::size_t min_sub_window = 5;
    };
    Adwin() = default;
    explicit Adwin(Params p) : params_(p) {}
    DetectorStatus update(double value);
    void reset();

    [[nodiscard]] const Params& params() const { return params_; }
    [[nodiscard]] std::size_t width() const { return width_; }
    [[nodiscard]] double mean() const { return width_ ? total_ / static_cast<double>(width_) : 0.0; }
    [[nodiscard]] double variance() const;

    // eps_cut shared with the brute-force oracle used in tests.
    static double cut_threshold(double n0, double n1, double total_var_over_n, double n,
                                double delta);

private:
    struct Bucket {
        double total = 0.0;
        double variance = 0.0;
    };
    struct Row {
        std::deque<Bucket> buckets;  // oldest first
    };

    void insert(double value);
    void compress();
    bool try_cut();
    void drop_oldest_bucket();

    Params params_;
    std::vector<Row> rows_;  // rows_[level] holds buckets of 2^level elements
    std::size_t width_ = 0;
    double total_ = 0.0;
    double var_sum_ = 0.0;  // sum of within+between variance contributions
    long long ticks_ = 0;
};

// --- HDDM_A (Frias-Blanco et al. 2015, averages) -------------------------------
// Hoeffding-bound comparison of the lowest recorded mean against the mean of
// the samples that followed it.
class HddmA {
public:
    struct Params {
        double alpha_warning = 0.005;
        double alpha_drift = 0.001;
        int min_instances = 30;
    };
    HddmA() { reset(); }
    explicit HddmA(Params p) : params_(p) { reset(); }
    DetectorStatus update(double error);
    void reset();

private:
    Params params_;
    double n_ = 0.0;
    double sum_ = 0.0;
    double min_n_ = 0.0;
    double min_sum_ = 0.0;
    double min_mean_plus_eps_ = std::numeric_limits<double>::infinity();
};

// --- HDDM_W (EWMA-weighted variant, McDiarmid bound) ----------------------------
class HddmW {
public:
    struct Params {
        double lambda = 0.05;  // EWMA weight of the newest sample
        double alpha_warning = 0.005;
        double alpha_drift = 0.001;
        int min_instances = 30;
    };
    HddmW() { reset(); }
    explicit HddmW(Params p) : params_(p) { reset(); }
    DetectorStatus update(double error);
    void reset();

private:
    Params params_;
    double n_ = 0.0;
    double ewma_ = 0.0;     // unnormalized EWMA numerator
    double wsum_ = 0.0;     // sum of weights
    double wsq_ = 0.0;      // sum of squared weights
    double min_mean_ = 0.0;
    double min_bv_ = 0.0;   // bounded-variance term at the minimum
    double min_score_ = std::numeric_limits<double>::infinity();
    bool has_min_ = false;
};

using LossDetector = std::variant<Ddm, Eddm, PageHinkley, Adwin, HddmA, HddmW>;

// Dispatch helper; validates error is in [0,1] for the 0/1-error detectors.
DetectorStatus detector_update(LossDetector& detector, double error);
void detector_reset(LossDetector& detector);

}  // namespace driftbench

#endif  // DRIFTBENCH_LOSS_DETECTORS_HPP
