#include "driftbench/ensemble.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "driftbench/stats.hpp"

namespace driftbench {

int learner_predict(const BaseLearner& learner, const std::vector<double>& x) {
    return std::visit([&](const auto& l) { return l.predict(x); }, learner);
}

void learner_learn(BaseLearner& learner, const std::vector<double>& x, int y) {
    std::visit([&](auto& l) { l.learn(x, y); }, learner);
}

Ensemble::Ensemble(EnsembleConfig config, Rng rng) : config_(config), rng_(rng) {
    if (config_.n_members < 1) throw std::invalid_argument("ensemble: n_members must be >= 1");
    if (config_.lambda_max <= 0.0) throw std::invalid_argument("ensemble: lambda_max must be > 0");
    if (config_.kind == LearnerKind::MlpLearner && config_.input_dim <= 0) {
        throw std::invalid_argument("ensemble: MLP members need input_dim");
    }
    err_ring_.assign(config_.error_window, 0);
    make_members();
}

void Ensemble::make_members() {
    members_.clear();
    member_rngs_.clear();
    members_.reserve(static_cast<std::size_t>(config_.n_members));
    member_rngs_.reserve(static_cast<std::size_t>(config_.n_members));
    for (int i = 0; i < config_.n_members; ++i) {
        member_rngs_.push_back(rng_.split(static_cast<std::uint64_t>(i) + 1));
        if (config_.kind == LearnerKind::HoeffdingTreeLearner) {
            members_.emplace_back(HoeffdingTree(config_.ht));
        } else {
            Rng init = member_rngs_.back().split(0xfeed);
            members_.emplace_back(Mlp(config_.input_dim, config_.mlp, init));
        }
    }
}

int Ensemble::predict(const std::vector<double>& x) const {
    return vote_fraction(x) > 0.5 ? 1 : 0;  // exact tie resolves to class 0
}

double Ensemble::vote_fraction(const std::vector<double>& x) const {
    int ones = 0;
    for (const auto& m : members_) ones += learner_predict(m, x);
    return static_cast<double>(ones) / static_cast<double>(members_.size());
}

int Ensemble::member_predict(int member, const std::vector<double>& x) const {
    return learner_predict(members_[static_cast<std::size_t>(member)], x);
}

double Ensemble::observe(const std::vector<double>& x, int y) {
    const std::uint8_t err = predict(x) != y ? 1 : 0;
    if (err_count_ < err_ring_.size()) {
        ++err_count_;
    } else {
        err_sum_ -= err_ring_[err_pos_];
    }
    err_ring_[err_pos_] = err;
    err_sum_ += err;
    err_pos_ = (err_pos_ + 1) % err_ring_.size();
    return epsilon();
}

double Ensemble::epsilon() const {
    // No evidence yet: assume maximal error so a fresh ensemble learns at
    // full rate.
    if (err_count_ == 0) return 1.0;
    return err_sum_ / static_cast<double>(err_count_);
}

double Ensemble::effective_lambda() const {
    return std::max(config_.lambda_floor, epsilon() * config_.lambda_max);
}

void Ensemble::learn(const std::vector<double>& x, int y) {
    const double lambda = effective_lambda();
    for (std::size_t i = 0; i < members_.size(); ++i) {
        const int k = poisson_sample(lambda, member_rngs_[i]);
        for (int c = 0; c < k; ++c) learner_learn(members_[i], x, y);
    }
}

void Ensemble::learn_per_member_labels(const std::vector<double>& x,
                                       std::span<const int> labels) {
    if (labels.size() != members_.size()) {
        throw std::invalid_argument("ensemble: per-member label count mismatch");
    }
    const double lambda = effective_lambda();
    for (std::size_t i = 0; i < members_.size(); ++i) {
        const int k = poisson_sample(lambda, member_rngs_[i]);
        for (int c = 0; c < k; ++c) learner_learn(members_[i], x, labels[i]);
    }
}

void Ensemble::learn_member(int member, const std::vector<double>& x, int y) {
    learner_learn(members_[static_cast<std::size_t>(member)], x, y);
}

void Ensemble::reset_member(int member) {
    auto& m = members_[static_cast<std::size_t>(member)];
    if (auto* tree = std::get_if<HoeffdingTree>(&m)) {
        tree->reset();
    } else {
        Rng init = member_rngs_[static_cast<std::size_t>(member)].split(rng_.next_u64());
        std::get<Mlp>(m).reset(init);
    }
}

void Ensemble::reset_all() {
    for (int i = 0; i < n_members(); ++i) reset_member(i);
    std::fill(err_ring_.begin(), err_ring_.end(), 0);
    err_pos_ = 0;
    err_count_ = 0;
    err_sum_ = 0.0;
}

std::string Ensemble::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "ensemble v1 " << members_.size() << ' ' << config_.lambda_max << ' '
       << config_.lambda_floor << ' ' << config_.error_window << '\n';
    os << epsilon() << '\n';
    for (const auto& m : members_) {
        std::visit([&](const auto& l) { os << l.serialize(); }, m);
    }
    return os.str();
}

}  // namespace driftbench
