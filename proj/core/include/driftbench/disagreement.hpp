#ifndef DRIFTBENCH_DISAGREEMENT_HPP
#define DRIFTBENCH_DISAGREEMENT_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "driftbench/ensemble.hpp"
#include "driftbench/stats.hpp"

namespace driftbench {

enum class EvalMode { OwnWindow, FullBatch };
enum class AdaptPolicy { ResetAll, ResetFraction, None };

struct DisagreementConfig {
    std::size_t batch_size = 1000;
    std::size_t q_size = 500;  // |Q|; |R| = batch_size - q_size
    // Instances between successive decisions; 0 means batch_size (tumbling
    // windows). Smaller strides slide the window so some evaluation always
    // lines up closely with a drift onset.
    std::size_t stride = 0;
    double alpha = 0.01;
    double flip_fraction = 0.5;
    EvalMode eval_mode = EvalMode::OwnWindow;
    AdaptPolicy adapt_policy = AdaptPolicy::ResetAll;
    double reset_fraction = 0.5;
    bool self_train = true;  // g absorbs each pseudo-labeled batch
    std::size_t min_window = 50;
    // Monte Carlo replicates for the permutation null of the KS statistic.
    // Smallest attainable p is 1/(null_replicates+1), so this must satisfy
    // null_replicates + 1 > 1/alpha for the test to ever fire.
    std::size_t null_replicates = 199;
    // Instances to skip after an alarm before refilling the window; gives a
    // freshly adapted ensemble time to settle so its own recovery churn is
    // not reported as another drift. 0 disables.
    std::size_t cooldown = 0;

    void validate() const;  // throws std::invalid_argument on violation
};

struct DriftDecision {
    bool drift = false;
    double d_stat = 0.0;
    double p_value = 1.0;
    std::size_t batch_index = 0;
};

// Ensemble majority vote for every instance; true labels are never consulted.
std::vector<int> pseudo_label(const Ensemble& ensemble,
                              std::span<const std::vector<double>> window);

// Exactly round(flip_fraction * n_members) entries set; deterministic for a
// given rng state.
std::vector<std::uint8_t> flip_assign(int n_members, double flip_fraction, Rng rng);

// Deep copy of the ensemble trained on the window with member m's labels
// inverted iff mask[m]; the original is untouched.
Ensemble train_flipped_copy(const Ensemble& ensemble,
                            std::span<const std::vector<double>> window,
                            std::span<const int> labels,
                            std::span<const std::uint8_t> mask);

// All N(N-1)/2 pairwise disagreement rates of the ensemble over the window.
std::vector<double> pairwise_disagreement(const Ensemble& ensemble,
                                          std::span<const std::vector<double>> window);

// Batch-driven drift detector: pseudo-label the Q/R halves, train flipped
// critic copies g_Q and g_R (shared mask, shared per-member randomness), and
// run a KS test between their pairwise-disagreement distributions.
class DisagreementDetector {
public:
    DisagreementDetector(Ensemble ensemble, DisagreementConfig config, std::uint64_t seed);

    // Streaming entry point: buffers x and returns a decision whenever a full
    // batch is assembled.
    std::optional<DriftDecision> push(const std::vector<double>& x);

    // One full detection step over an explicit batch, pseudo-labeling with
    // the ensemble's current state.
    DriftDecision step(std::span<const std::vector<double>> batch);
    // Same, with caller-provided pseudo-labels (push() records them on
    // arrival so they track the evolving ensemble).
    DriftDecision step(std::span<const std::vector<double>> batch,
                       std::span<const int> pseudo_labels);

    // Short tail handling: processed as a reduced batch when at least
    // 2*min_window instances are pending, otherwise discarded.
    std::optional<DriftDecision> finish();

    [[nodiscard]] Ensemble& ensemble() { return ensemble_; }
    [[nodiscard]] const Ensemble& ensemble() const { return ensemble_; }
    [[nodiscard]] const DisagreementConfig& config() const { return config_; }
    [[nodiscard]] std::size_t batches_seen() const { return batch_index_; }

    // When the harness trains the ensemble with true labels, per-batch
    // self-training is turned off through this switch.
    void set_self_train(bool enabled) { config_.self_train = enabled; }

    // Applies the configured adaptation policy and warm-starts on the batch.
    // step() calls this on drift; exposed so harnesses can adapt on external
    // signals as well.
    void adapt(std::span<const std::vector<double>> batch, std::span<const int> labels);

private:
    DriftDecision step_impl(std::span<const std::vector<double>> batch,
                            std::span<const int> pseudo_labels, const Ensemble& base,
                            std::size_t n_new);

    Ensemble ensemble_;
    DisagreementConfig config_;
    Rng rng_;
    std::size_t batch_index_ = 0;
    std::vector<std::vector<double>> pending_;
    std::vector<int> pending_labels_;
    std::size_t fresh_ = 0;  // instances appended since the last decision
    std::size_t skip_ = 0;   // cooldown countdown after an alarm
};

}  // namespace driftbench

#endif  // DRIFTBENCH_DISAGREEMENT_HPP
