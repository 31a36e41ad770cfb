#ifndef DRIFTBENCH_ENSEMBLE_HPP
#define DRIFTBENCH_ENSEMBLE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "driftbench/hoeffding_tree.hpp"
#include "driftbench/mlp.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

enum class LearnerKind { HoeffdingTreeLearner, MlpLearner };

using BaseLearner = std::variant<HoeffdingTree, Mlp>;

int learner_predict(const BaseLearner& learner, const std::vector<double>& x);
void learner_learn(BaseLearner& learner, const std::vector<double>& x, int y);

struct EnsembleConfig {
    LearnerKind kind = LearnerKind::HoeffdingTreeLearner;
    int n_members = 100;
    double lambda_max = 6.0;
    double lambda_floor = 0.05;  // 0 matches lambda(eps) = eps * lambda_max exactly
    std::size_t error_window = 500;
    int input_dim = 0;  // required for MLP members
    HtParams ht;
    MlpParams mlp;
};

// Oza-bagging ensemble with error-adaptive Poisson resampling: each member
// trains on an instance k ~ Poisson(max(lambda_floor, eps * lambda_max))
// times, where eps is the sliding-window prequential error. Value semantics:
// copying an Ensemble yields a deep, independent clone.
class Ensemble {
public:
    Ensemble(EnsembleConfig config, Rng rng);

    int predict(const std::vector<double>& x) const;  // majority vote, tie -> 0
    double vote_fraction(const std::vector<double>& x) const;  // fraction voting 1
    int member_predict(int member, const std::vector<double>& x) const;

    // Prequential error update (call before learn, test-then-train).
    // Returns the updated epsilon.
    double observe(const std::vector<double>& x, int y);

    // Train all members with adaptive Poisson resampling.
    void learn(const std::vector<double>& x, int y);
    // Same, but with a per-member label (used by flipped critic copies).
    void learn_per_member_labels(const std::vector<double>& x, std::span<const int> labels);
    void learn_member(int member, const std::vector<double>& x, int y);

    [[nodiscard]] double epsilon() const;
    [[nodiscard]] double effective_lambda() const;
    [[nodiscard]] int n_members() const { return static_cast<int>(members_.size()); }
    [[nodiscard]] const EnsembleConfig& config() const { return config_; }
    [[nodiscard]] const BaseLearner& member(int i) const {
        return members_[static_cast<std::size_t>(i)];
    }

    void reset_all();               // reinitialize every member, clear eps window
    void reset_member(int member);  // reinitialize one member

    [[nodiscard]] std::string serialize() const;

private:
    void make_members();

    EnsembleConfig config_;
    Rng rng_;
    std::vector<BaseLearner> members_;
    std::vector<Rng> member_rngs_;

    std::vector<std::uint8_t> err_ring_;
    std::size_t err_pos_ = 0;
    std::size_t err_count_ = 0;
    double err_sum_ = 0.0;
};

}  // namespace driftbench

#endif  // DRIFTBENCH_ENSEMBLE_HPP
