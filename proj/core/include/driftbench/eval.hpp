#ifndef DRIFTBENCH_EVAL_HPP
#define DRIFTBENCH_EVAL_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftbench/ensemble.hpp"
#include "driftbench/stream.hpp"

namespace driftbench {

struct DetectionScore {
    std::optional<double> mtd;  // empty when nothing was detected
    double da = 0.0;
    int fa = 0;
};

// First alarm inside [p, p+window_len) detects drift p with delay alarm-p;
// surplus in-window alarms and alarms outside every window are false alarms.
// Events must be sorted ascending.
DetectionScore score_detections(std::span<const std::size_t> events,
                                std::span<const std::size_t> drifts,
                                std::size_t window_len);

struct RunResult {
    std::string run_id;
    std::string stream;
    std::string detector;
    std::string ensemble_type;
    std::string drift_kind;
    std::optional<double> mtd;
    double da = 0.0;
    int fa = 0;
    double mean_acc = 0.0;
    std::uint64_t seed = 0;
    std::string config_json;
    std::vector<std::size_t> detections;
    std::vector<std::pair<std::size_t, double>> acc_trace;
};

struct ScoredConfig {
    std::string fingerprint;
    double score = 0.0;
    bool score_defined = true;
    double da = 0.0;
    double fa = 0.0;
    std::optional<double> mtd;
};

// 0.5*DA + 0.3*(1-FA_norm) + 0.2*(1-MTD_norm) with FA/MTD min-max normalized
// across the candidate set (undetected MTD = set maximum); descending score,
// ties broken by fingerprint.
std::vector<ScoredConfig> tuning_score(const std::vector<RunResult>& results);

struct ErrorDecomposition {
    double eps_h = 0.0;     // 0/1 error of h
    double eps_pair = 0.0;  // disagreement of h and h_ref
    double eps_ref = 0.0;   // 0/1 error of h_ref
    double slack = 0.0;     // eps_pair + eps_ref - eps_h
};

using Predictor = std::function<int(const std::vector<double>&)>;

ErrorDecomposition error_decomposition(const Predictor& h, const Predictor& h_ref,
                                       std::span<const Instance> batch);

// --- prequential runner --------------------------------------------------------

struct DetectorConfig {
    std::string kind = "none";  // ddm|eddm|ph|adwin|hddm_a|hddm_w|d3|disagreement|none
    std::string params_json = "{}";
};

struct RunOptions {
    std::size_t window_abrupt = 7500;
    std::size_t window_gradual = 9000;
    std::size_t acc_window = 1000;
    std::size_t acc_every = 500;
    bool labeled = true;         // ensemble trains on true labels per instance
    bool adapt_on_drift = true;  // loss/data detectors reset the ensemble on drift
};

// Test-then-train loop: predict, record error, feed the detector (error for
// loss-based, features for data-based, feature batches for disagreement),
// then train. With labeled=false the disagreement path self-trains on
// pseudo-labels and true labels never reach the detector or the ensemble.
RunResult run_prequential(const StreamSpec& stream, const EnsembleConfig& ensemble_cfg,
                          const DetectorConfig& detector_cfg, std::uint64_t seed,
                          const RunOptions& options = {});

std::string fingerprint(const std::string& payload);

}  // namespace driftbench

#endif  // DRIFTBENCH_EVAL_HPP
