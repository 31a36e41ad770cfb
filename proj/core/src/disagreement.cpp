#include "driftbench/disagreement.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace driftbench {

void DisagreementConfig::validate() const {
    if (q_size == 0 || q_size >= batch_size) {
        throw std::invalid_argument("disagreement: q_size must split the batch");
    }
    if (q_size < min_window || batch_size - q_size < min_window) {
        throw std::invalid_argument("disagreement: Q and R must hold at least min_window instances");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("disagreement: alpha must lie in (0,1)");
    }
    if (!(flip_fraction > 0.0 && flip_fraction < 1.0)) {
        throw std::invalid_argument("disagreement: flip_fraction must lie in (0,1)");
    }
    if (adapt_policy == AdaptPolicy::ResetFraction &&
        !(reset_fraction > 0.0 && reset_fraction <= 1.0)) {
        throw std::invalid_argument("disagreement: reset_fraction must lie in (0,1]");
    }
    if (stride > batch_size) {
        throw std::invalid_argument("disagreement: stride must not exceed batch_size");
    }
    if (static_cast<double>(null_replicates + 1) * alpha <= 1.0) {
        throw std::invalid_argument(
            "disagreement: null_replicates too small for alpha; the permutation "
            "p-value could never drop below alpha");
    }
}

std::vector<int> pseudo_label(const Ensemble& ensemble,
                              std::span<const std::vector<double>> window) {
    if (window.empty()) throw std::invalid_argument("pseudo_label: empty window");
    std::vector<int> labels(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        labels[i] = ensemble.predict(window[i]);
    }
    return labels;
}

std::vector<std::uint8_t> flip_assign(int n_members, double flip_fraction, Rng rng) {
    if (n_members < 2) throw std::invalid_argument("flip_assign: need at least 2 members");
    if (!(flip_fraction > 0.0 && flip_fraction < 1.0)) {
        throw std::invalid_argument("flip_assign: flip_fraction must lie in (0,1)");
    }
    const int k = static_cast<int>(std::lround(flip_fraction * n_members));
    std::vector<int> idx(static_cast<std::size_t>(n_members));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first k slots are the flipped members.
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_members - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_members), 0);
    for (int i = 0; i < k; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
    return mask;
}

Ensemble train_flipped_copy(const Ensemble& ensemble,
                            std::span<const std::vector<double>> window,
                            std::span<const int> labels,
                            std::span<const std::uint8_t> mask) {
    if (mask.size() != static_cast<std::size_t>(ensemble.n_members())) {
        throw std::invalid_argument("train_flipped_copy: mask length must equal n_members");
    }
    if (window.size() != labels.size()) {
        throw std::invalid_argument("train_flipped_copy: window/label size mismatch");
    }
    Ensemble copy = ensemble;
    std::vector<int> member_labels(mask.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        for (std::size_t m = 0; m < mask.size(); ++m) {
            member_labels[m] = mask[m] ? 1 - labels[i] : labels[i];
        }
        copy.learn_per_member_labels(window[i], member_labels);
    }
    return copy;
}

std::vector<double> pairwise_disagreement(const Ensemble& ensemble,
                                          std::span<const std::vector<double>> window) {
    if (window.empty()) throw std::invalid_argument("pairwise_disagreement: empty window");
    const int n = ensemble.n_members();
    const std::size_t k = window.size();
    const std::size_t words = (k + 63) / 64;

    // One bit row of predictions per member, then popcount XOR per pair.
    std::vector<std::uint64_t> bits(static_cast<std::size_t>(n) * words, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (int m = 0; m < n; ++m) {
            if (ensemble.member_predict(m, window[i])) {
                bits[static_cast<std::size_t>(m) * words + i / 64] |= std::uint64_t{1} << (i % 64);
            }
        }
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) - 1) / 2);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            std::size_t diff = 0;
            const std::uint64_t* ra = bits.data() + static_cast<std::size_t>(a) * words;
            const std::uint64_t* rb = bits.data() + static_cast<std::size_t>(b) * words;
            for (std::size_t w = 0; w < words; ++w) {
                diff += static_cast<std::size_t>(std::popcount(ra[w] ^ rb[w]));
            }
            out.push_back(static_cast<double>(diff) / static_cast<double>(k));
        }
    }
    return out;
}

DisagreementDetector::DisagreementDetector(Ensemble ensemble, DisagreementConfig config,
                                           std::uint64_t seed)
    : ensemble_(std::move(ensemble)), config_(config), rng_(seed) {
    config_.validate();
}

std::optional<DriftDecision> DisagreementDetector::push(const std::vector<double>& x) {
    if (skip_ > 0) {
        --skip_;
        return std::nullopt;
    }
    // Pseudo-label on arrival: the label records what the ensemble believed
    // when the instance streamed in, so a batch straddling a drift carries the
    // model's evolving view rather than one retrospective snapshot.
    pending_labels_.push_back(ensemble_.predict(x));
    pending_.push_back(x);
    ++fresh_;
    if (pending_.size() < config_.batch_size) return std::nullopt;
    const auto decision =
        step_impl(pending_, pending_labels_, ensemble_, std::min(fresh_, pending_.size()));
    fresh_ = 0;
    if (decision.drift) {
        // The ensemble just adapted; window contents describe the old state.
        pending_.clear();
        pending_labels_.clear();
        skip_ = config_.cooldown;
    } else {
        const std::size_t hop = config_.stride == 0 ? config_.batch_size : config_.stride;
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(hop));
        pending_labels_.erase(pending_labels_.begin(),
                              pending_labels_.begin() + static_cast<std::ptrdiff_t>(hop));
    }
    return decision;
}

std::optional<DriftDecision> DisagreementDetector::finish() {
    if (pending_.size() < 2 * config_.min_window) {
        pending_.clear();
        pending_labels_.clear();
        return std::nullopt;
    }
    auto batch = std::move(pending_);
    auto labels = std::move(pending_labels_);
    const std::size_t fresh = std::min(fresh_, batch.size());
    fresh_ = 0;
    pending_.clear();
    pending_labels_.clear();
    return step_impl(batch, labels, ensemble_, fresh);
}

DriftDecision DisagreementDetector::step(std::span<const std::vector<double>> batch) {
    const auto labels = pseudo_label(ensemble_, batch);
    return step(batch, labels);
}

DriftDecision DisagreementDetector::step(std::span<const std::vector<double>> batch,
                                         std::span<const int> pseudo_labels) {
    return step_impl(batch, pseudo_labels, ensemble_, batch.size());
}

DriftDecision DisagreementDetector::step_impl(std::span<const std::vector<double>> batch,
                                              std::span<const int> pseudo_labels,
                                              const Ensemble& base, std::size_t n_new) {
    if (batch.size() < 2 * config_.min_window) {
        throw std::invalid_argument("disagreement: batch shorter than 2*min_window");
    }
    if (batch.size() != pseudo_labels.size()) {
        throw std::invalid_argument("disagreement: batch/label size mismatch");
    }
    // Scale the split proportionally for reduced tail batches.
    std::size_t q = batch.size() == config_.batch_size
                        ? config_.q_size
                        : std::max(config_.min_window,
                                   batch.size() * config_.q_size / config_.batch_size);
    q = std::min(q, batch.size() - config_.min_window);

    const auto mask =
        flip_assign(ensemble_.n_members(), config_.flip_fraction, rng_.split(batch_index_));

    // KS statistic between the pairwise-disagreement distributions of the two
    // flipped critics, for an arbitrary assignment of batch slots to Q and R.
    auto split_stat = [&](std::span<const std::size_t> order) {
        std::vector<std::vector<double>> wq, wr;
        std::vector<int> lq, lr;
        wq.reserve(q);
        lq.reserve(q);
        wr.reserve(batch.size() - q);
        lr.reserve(batch.size() - q);
        for (std::size_t i = 0; i < order.size(); ++i) {
            auto& w = i < q ? wq : wr;
            auto& l = i < q ? lq : lr;
            w.push_back(batch[order[i]]);
            l.push_back(pseudo_labels[order[i]]);
        }
        const Ensemble g_q = train_flipped_copy(base, wq, lq, mask);
        const Ensemble g_r = train_flipped_copy(base, wr, lr, mask);
        std::vector<double> d_q;
        std::vector<double> d_r;
        if (config_.eval_mode == EvalMode::OwnWindow) {
            d_q = pairwise_disagreement(g_q, wq);
            d_r = pairwise_disagreement(g_r, wr);
        } else {
            d_q = pairwise_disagreement(g_q, batch);
            d_r = pairwise_disagreement(g_r, batch);
        }
        return ks_two_sample(d_q, d_r).d_stat;
    };

    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    const double d_obs = split_stat(order);

    // Permutation null: batch slots are exchangeable when nothing drifts, so
    // random re-splits draw from the null of the full train-and-compare
    // statistic. This stays calibrated even though the pairwise rates are
    // correlated through shared members, where the textbook KS p is not.
    // Sequential (Besag-Clifford) sampling: once enough replicates reach
    // d_obs that rejection is impossible, stop early with p = hits/tried.
    Rng perm_rng = rng_.split(0x9e3779b9u + batch_index_);
    const std::size_t n_rep = config_.null_replicates;
    const auto stop_hits = static_cast<std::size_t>(
        std::ceil(config_.alpha * static_cast<double>(n_rep + 1)));
    std::size_t at_least = 0;
    std::size_t tried = 0;
    while (tried < n_rep) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j = perm_rng.next_below(i + 1);
            std::swap(order[i], order[j]);
        }
        ++tried;
        if (split_stat(order) >= d_obs - 1e-12 && ++at_least >= stop_hits) break;
    }

    DriftDecision decision;
    decision.d_stat = d_obs;
    decision.p_value = tried < n_rep
                           ? static_cast<double>(at_least) / static_cast<double>(tried)
                           : static_cast<double>(1 + at_least) / static_cast<double>(1 + n_rep);
    decision.drift = decision.p_value < config_.alpha;
    decision.batch_index = batch_index_++;

    if (decision.drift) {
        adapt(batch, pseudo_labels);
    } else if (config_.self_train) {
        // With a sliding stride only the instances that entered since the
        // previous decision are new; absorbing the whole overlap would train
        // on the same data repeatedly.
        for (std::size_t i = batch.size() - n_new; i < batch.size(); ++i) {
            ensemble_.observe(batch[i], pseudo_labels[i]);
            ensemble_.learn(batch[i], pseudo_labels[i]);
        }
    }
    return decision;
}

void DisagreementDetector::adapt(std::span<const std::vector<double>> batch,
                                 std::span<const int> labels) {
    switch (config_.adapt_policy) {
        case AdaptPolicy::None:
            return;
        case AdaptPolicy::ResetAll:
            ensemble_.reset_all();
            break;
        case AdaptPolicy::ResetFraction: {
            // Reinitialize the members most at odds with the batch pseudo-labels.
            const int n = ensemble_.n_members();
            const int n_reset = static_cast<int>(
                std::lround(config_.reset_fraction * static_cast<double>(n)));
            std::vector<std::pair<double, int>> scored;
            scored.reserve(static_cast<std::size_t>(n));
            for (int m = 0; m < n; ++m) {
                double errs = 0.0;
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    errs += ensemble_.member_predict(m, batch[i]) != labels[i] ? 1.0 : 0.0;
                }
                scored.emplace_back(-errs, m);  // worst first after sort
            }
            std::sort(scored.begin(), scored.end());
            for (int i = 0; i < n_reset; ++i) ensemble_.reset_member(scored[static_cast<std::size_t>(i)].second);
            break;
        }
    }
    // Warm start on the current batch; true labels stay withheld.
    for (std::size_t i = 0; i < batch.size(); ++i) {
        ensemble_.observe(batch[i], labels[i]);
        ensemble_.learn(batch[i], labels[i]);
    }
}

}  // namespace driftbench
