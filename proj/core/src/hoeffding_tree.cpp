#include "driftbench/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "driftbench/stats.hpp"

namespace driftbench {

namespace {

double binary_entropy(double p0, double p1) {
    const double n = p0 + p1;
    if (n <= 0.0) return 0.0;
    double h = 0.0;
    for (double c : {p0, p1}) {
        if (c > 0.0) {
            const double p = c / n;
            h -= p * std::log2(p);
        }
    }
    return h;
}

}  // namespace

void HoeffdingTree::GaussianEstimator::add(double v) {
    n += 1.0;
    const double d = v - mean;
    mean += d / n;
    m2 += d * (v - mean);
    min = std::min(min, v);
    max = std::max(max, v);
}

double HoeffdingTree::GaussianEstimator::stddev() const {
    if (n < 2.0) return 0.0;
    return std::sqrt(std::max(0.0, m2 / (n - 1.0)));
}

double HoeffdingTree::GaussianEstimator::cdf(double t) const {
    if (n <= 0.0) return 0.0;
    const double sd = stddev();
    if (sd <= 1e-12) return t >= mean ? 1.0 : 0.0;
    return 0.5 * (1.0 + std::erf((t - mean) / (sd * 1.4142135623730951)));
}

HoeffdingTree::HoeffdingTree(HtParams params) : params_(params) {
    nodes_.emplace_back();
}

void HoeffdingTree::reset() {
    nodes_.clear();
    nodes_.emplace_back();
    dim_ = -1;
}

void HoeffdingTree::check_dimension(const std::vector<double>& x) const {
    if (dim_ >= 0 && static_cast<int>(x.size()) != dim_) {
        throw std::invalid_argument("hoeffding tree: feature dimension mismatch");
    }
}

int HoeffdingTree::route(const std::vector<double>& x) const {
    int id = 0;
    while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return id;
}

std::array<double, 2> HoeffdingTree::leaf_distribution(const std::vector<double>& x) const {
    // Walk the routing path keeping the deepest non-empty class counts, so a
    // freshly created child predicts with its parent's evidence.
    std::array<double, 2> best{0.0, 0.0};
    int id = 0;
    while (true) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.counts[0] + n.counts[1] > 0.0) best = n.counts;
        if (n.feature < 0) break;
        id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    const double total = best[0] + best[1];
    if (total <= 0.0) return {0.5, 0.5};
    if (params_.naive_bayes_leaves) {
        const Node& leaf = nodes_[static_cast<std::size_t>(route(x))];
        if (leaf.counts[0] + leaf.counts[1] >= 1.0 && !leaf.stats.empty()) {
            std::array<double, 2> logp{};
            bool usable = true;
            for (int c = 0; c < 2; ++c) {
                if (leaf.counts[static_cast<std::size_t>(c)] <= 0.0) {
                    usable = false;
                    break;
                }
                logp[static_cast<std::size_t>(c)] =
                    std::log(leaf.counts[static_cast<std::size_t>(c)] /
                             (leaf.counts[0] + leaf.counts[1]));
                for (std::size_t f = 0; f < leaf.stats.size(); ++f) {
                    const auto& est = leaf.stats[f][static_cast<std::size_t>(c)];
                    const double sd = std::max(est.stddev(), 1e-3);
                    const double z = (x[f] - est.mean) / sd;
                    logp[static_cast<std::size_t>(c)] += -0.5 * z * z - std::log(sd);
                }
            }
            if (usable) {
                const double m = std::max(logp[0], logp[1]);
                const double e0 = std::exp(logp[0] - m);
                const double e1 = std::exp(logp[1] - m);
                return {e0 / (e0 + e1), e1 / (e0 + e1)};
            }
        }
    }
    return {best[0] / total, best[1] / total};
}

std::array<double, 2> HoeffdingTree::predict_proba(const std::vector<double>& x) const {
    check_dimension(x);
    return leaf_distribution(x);
}

int HoeffdingTree::predict(const std::vector<double>& x) const {
    const auto p = predict_proba(x);
    return p[1] > p[0] ? 1 : 0;  // tie goes to class 0
}

void HoeffdingTree::learn(const std::vector<double>& x, int y) {
    if (y != 0 && y != 1) throw std::invalid_argument("hoeffding tree: label must be 0 or 1");
    if (dim_ < 0) dim_ = static_cast<int>(x.size());
    check_dimension(x);

    const int leaf_id = route(x);
    Node& leaf = nodes_[static_cast<std::size_t>(leaf_id)];
    if (leaf.stats.empty()) leaf.stats.resize(x.size());
    leaf.counts[static_cast<std::size_t>(y)] += 1.0;
    for (std::size_t f = 0; f < x.size(); ++f) {
        leaf.stats[f][static_cast<std::size_t>(y)].add(x[f]);
    }

    const double n = leaf.counts[0] + leaf.counts[1];
    if (n - leaf.n_at_last_check >= params_.grace_period) {
        nodes_[static_cast<std::size_t>(leaf_id)].n_at_last_check = n;
        maybe_split(leaf_id);
    }
}

void HoeffdingTree::maybe_split(int leaf_id) {
    const Node& leaf = nodes_[static_cast<std::size_t>(leaf_id)];
    const double n0 = leaf.counts[0];
    const double n1 = leaf.counts[1];
    const double n = n0 + n1;
    if (n0 <= 0.0 || n1 <= 0.0) return;  // pure leaf

    const double h_parent = binary_entropy(n0, n1);

    double best_gain = 0.0;
    double second_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    for (std::size_t f = 0; f < leaf.stats.size(); ++f) {
        const auto& e0 = leaf.stats[f][0];
        const auto& e1 = leaf.stats[f][1];
        const double lo = std::min(e0.min, e1.min);
        const double hi = std::max(e0.max, e1.max);
        if (!(hi > lo)) continue;

        double feature_gain = 0.0;
        double feature_threshold = 0.0;
        for (int c = 1; c <= params_.n_candidates; ++c) {
            const double t = lo + (hi - lo) * c / (params_.n_candidates + 1);
            const double l0 = n0 * e0.cdf(t);
            const double l1 = n1 * e1.cdf(t);
            const double r0 = n0 - l0;
            const double r1 = n1 - l1;
            const double nl = l0 + l1;
            const double nr = r0 + r1;
            if (nl < 1.0 || nr < 1.0) continue;
            const double gain = h_parent - (nl / n) * binary_entropy(l0, l1) -
                                (nr / n) * binary_entropy(r0, r1);
            if (gain > feature_gain) {
                feature_gain = gain;
                feature_threshold = t;
            }
        }
        if (feature_gain > best_gain) {
            second_gain = best_gain;
            best_gain = feature_gain;
            best_feature = static_cast<int>(f);
            best_threshold = feature_threshold;
        } else if (feature_gain > second_gain) {
            second_gain = feature_gain;
        }
    }

    if (best_feature < 0 || best_gain <= 1e-10) return;

    const double epsilon = hoeffding_bound(1.0, params_.split_confidence,
                                           static_cast<std::size_t>(n));
    if (best_gain - second_gain > epsilon || epsilon < params_.tie_threshold) {
        const int left_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const int right_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Node& parent = nodes_[static_cast<std::size_t>(leaf_id)];
        parent.feature = best_feature;
        parent.threshold = best_threshold;
        parent.left = left_id;
        parent.right = right_id;
        parent.stats.clear();
        parent.stats.shrink_to_fit();
    }
}

std::string HoeffdingTree::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "ht v1 " << nodes_.size() << ' ' << dim_ << ' ' << params_.grace_period << ' '
       << params_.split_confidence << ' ' << params_.tie_threshold << ' '
       << params_.naive_bayes_leaves << ' ' << params_.n_candidates << '\n';
    for (const auto& n : nodes_) {
        os << n.feature << ' ' << n.threshold << ' ' << n.left << ' ' << n.right << ' '
           << n.counts[0] << ' ' << n.counts[1];
        os << ' ' << n.stats.size();
        for (const auto& fs : n.stats) {
            for (const auto& e : fs) {
                // empty estimators carry +/-inf sentinels; write zeros instead
                // and restore them on load
                os << ' ' << e.n << ' ' << e.mean << ' ' << e.m2 << ' '
                   << (e.n > 0.0 ? e.min : 0.0) << ' ' << (e.n > 0.0 ? e.max : 0.0);
            }
        }
        os << '\n';
    }
    return os.str();
}

HoeffdingTree HoeffdingTree::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string magic;
    std::string version;
    is >> magic >> version;
    if (magic != "ht" || version != "v1") {
        throw std::invalid_argument("hoeffding tree: unknown snapshot format");
    }
    std::size_t n_nodes = 0;
    HtParams p;
    int dim = -1;
    is >> n_nodes >> dim >> p.grace_period >> p.split_confidence >> p.tie_threshold >>
        p.naive_bayes_leaves >> p.n_candidates;
    HoeffdingTree tree(p);
    tree.dim_ = dim;
    tree.nodes_.clear();
    tree.nodes_.resize(n_nodes);
    for (auto& n : tree.nodes_) {
        std::size_t n_stats = 0;
        is >> n.feature >> n.threshold >> n.left >> n.right >> n.counts[0] >> n.counts[1] >>
            n_stats;
        n.stats.resize(n_stats);
        for (auto& fs : n.stats) {
            for (auto& e : fs) {
                is >> e.n >> e.mean >> e.m2 >> e.min >> e.max;
                if (e.n <= 0.0) {
                    e.min = std::numeric_limits<double>::infinity();
                    e.max = -std::numeric_limits<double>::infinity();
                }
            }
        }
    }
    if (!is) throw std::invalid_argument("hoeffding tree: truncated snapshot");
    return tree;
}

}  // namespace driftbench
