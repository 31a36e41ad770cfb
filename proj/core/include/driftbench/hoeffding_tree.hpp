#ifndef DRIFTBENCH_HOEFFDING_TREE_HPP
#define DRIFTBENCH_HOEFFDING_TREE_HPP

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace driftbench {

struct HtParams {
    int grace_period = 200;          // n_min
    double split_confidence = 1e-7;  // delta
    double tie_threshold = 0.05;     // tau
    bool naive_bayes_leaves = false;
    int n_candidates = 10;  // thresholds per numeric feature
};

// Incremental binary-class decision tree: leaves accumulate per-class counts
// and per-(feature, class) Gaussian summaries; a leaf splits when the
// information-gain lead of the best feature over the second best clears the
// Hoeffding bound (or the bound drops below the tie threshold). Structure
// only grows.
class HoeffdingTree {
public:
    explicit HoeffdingTree(HtParams params = {});

    int predict(const std::vector<double>& x) const;
    std::array<double, 2> predict_proba(const std::vector<double>& x) const;
    void learn(const std::vector<double>& x, int y);
    void reset();

    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] int root_split_feature() const { return nodes_[0].feature; }
    [[nodiscard]] const HtParams& params() const { return params_; }
    [[nodiscard]] std::string serialize() const;
    static HoeffdingTree deserialize(const std::string& text);

private:
    struct GaussianEstimator {
        double n = 0.0;
        double mean = 0.0;
        double m2 = 0.0;
        double min = std::numeric_limits<double>::infinity();
        double max = -std::numeric_limits<double>::infinity();

        void add(double v);
        [[nodiscard]] double stddev() const;
        // Estimated fraction of mass at or below t.
        [[nodiscard]] double cdf(double t) const;
    };

    struct Node {
        int feature = -1;  // -1 => leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::array<double, 2> counts{0.0, 0.0};
        std::vector<std::array<GaussianEstimator, 2>> stats;  // per feature
        double n_at_last_check = 0.0;
    };

    int route(const std::vector<double>& x) const;
    std::array<double, 2> leaf_distribution(const std::vector<double>& x) const;
    void maybe_split(int leaf_id);
    void check_dimension(const std::vector<double>& x) const;

    HtParams params_;
    std::vector<Node> nodes_;
    int dim_ = -1;
};

}  // namespace driftbench

#endif  // DRIFTBENCH_HOEFFDING_TREE_HPP
