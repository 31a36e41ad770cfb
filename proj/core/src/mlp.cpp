#include "driftbench/mlp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace driftbench {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Mlp::Mlp(int dim, MlpParams params, Rng& init_rng) : params_(params), dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("mlp: dimension must be positive");
    if (params_.hidden <= 0) throw std::invalid_argument("mlp: hidden size must be positive");
    init_weights(init_rng);
}

void Mlp::init_weights(Rng& rng) {
    const std::size_t h = static_cast<std::size_t>(params_.hidden);
    const std::size_t d = static_cast<std::size_t>(dim_);
    w1_.assign(h * d, 0.0);
    b1_.assign(h, 0.0);
    w2_.assign(h, 0.0);  // zero output layer => 0.5 before training
    b2_ = 0.0;
    const double bound = std::sqrt(6.0 / static_cast<double>(d + h));
    for (auto& w : w1_) w = (2.0 * rng.next_double() - 1.0) * bound;
    std_n_ = 0.0;
    std_mean_.assign(d, 0.0);
    std_m2_.assign(d, 0.0);
}

void Mlp::reset(Rng& init_rng) { init_weights(init_rng); }

void Mlp::check_input(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim_) {
        throw std::invalid_argument("mlp: feature dimension mismatch");
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("mlp: non-finite input");
    }
}

std::vector<double> Mlp::standardized(const std::vector<double>& x) const {
    if (!params_.standardize || std_n_ < 2.0) return x;
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double var = std_m2_[i] / (std_n_ - 1.0);
        const double sd = var > 1e-12 ? std::sqrt(var) : 1.0;
        z[i] = (x[i] - std_mean_[i]) / sd;
    }
    return z;
}

double Mlp::predict_proba1(const std::vector<double>& x) const {
    check_input(x);
    const auto z = standardized(x);
    const std::size_t h = static_cast<std::size_t>(params_.hidden);
    const std::size_t d = static_cast<std::size_t>(dim_);
    double out = b2_;
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1_[j];
        for (std::size_t i = 0; i < d; ++i) a += w1_[j * d + i] * z[i];
        if (a > 0.0) out += w2_[j] * a;
    }
    return sigmoid(out);
}

std::array<double, 2> Mlp::predict_proba(const std::vector<double>& x) const {
    const double p1 = predict_proba1(x);
    return {1.0 - p1, p1};
}

int Mlp::predict(const std::vector<double>& x) const {
    return predict_proba1(x) > 0.5 ? 1 : 0;
}

double Mlp::loss(const std::vector<double>& x, int y) const {
    const double p = predict_proba1(x);
    const double eps = 1e-12;
    return y == 1 ? -std::log(p + eps) : -std::log(1.0 - p + eps);
}

std::vector<double> Mlp::gradient(const std::vector<double>& x, int y) const {
    check_input(x);
    if (y != 0 && y != 1) throw std::invalid_argument("mlp: label must be 0 or 1");
    const auto z = standardized(x);
    const std::size_t h = static_cast<std::size_t>(params_.hidden);
    const std::size_t d = static_cast<std::size_t>(dim_);

    std::vector<double> act(h);
    std::vector<double> pre(h);
    double out = b2_;
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1_[j];
        for (std::size_t i = 0; i < d; ++i) a += w1_[j * d + i] * z[i];
        pre[j] = a;
        act[j] = a > 0.0 ? a : 0.0;
        out += w2_[j] * act[j];
    }
    const double dz2 = sigmoid(out) - static_cast<double>(y);

    std::vector<double> grad(w1_.size() + b1_.size() + w2_.size() + 1, 0.0);
    double* gw1 = grad.data();
    double* gb1 = gw1 + w1_.size();
    double* gw2 = gb1 + b1_.size();
    double* gb2 = gw2 + w2_.size();
    *gb2 = dz2;
    for (std::size_t j = 0; j < h; ++j) {
        gw2[j] = dz2 * act[j];
        if (pre[j] > 0.0) {
            const double dz1 = dz2 * w2_[j];
            gb1[j] = dz1;
            for (std::size_t i = 0; i < d; ++i) gw1[j * d + i] = dz1 * z[i];
        }
    }
    return grad;
}

void Mlp::learn(const std::vector<double>& x, int y) {
    check_input(x);
    if (params_.standardize) {
        std_n_ += 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double delta = x[i] - std_mean_[i];
            std_mean_[i] += delta / std_n_;
            std_m2_[i] += delta * (x[i] - std_mean_[i]);
        }
    }
    auto grad = gradient(x, y);
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    double scale = params_.learning_rate;
    if (params_.clip_norm > 0.0 && norm > params_.clip_norm) {
        scale *= params_.clip_norm / norm;
    }
    auto flat = flatten_weights();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= scale * grad[i];
    set_weights(flat);
}

std::vector<double> Mlp::flatten_weights() const {
    std::vector<double> flat;
    flat.reserve(w1_.size() + b1_.size() + w2_.size() + 1);
    flat.insert(flat.end(), w1_.begin(), w1_.end());
    flat.insert(flat.end(), b1_.begin(), b1_.end());
    flat.insert(flat.end(), w2_.begin(), w2_.end());
    flat.push_back(b2_);
    return flat;
}

void Mlp::set_weights(const std::vector<double>& flat) {
    if (flat.size() != w1_.size() + b1_.size() + w2_.size() + 1) {
        throw std::invalid_argument("mlp: flat weight size mismatch");
    }
    std::size_t k = 0;
    for (auto& w : w1_) w = flat[k++];
    for (auto& b : b1_) b = flat[k++];
    for (auto& w : w2_) w = flat[k++];
    b2_ = flat[k];
}

std::string Mlp::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "mlp v1 " << dim_ << ' ' << params_.hidden << ' ' << params_.learning_rate << ' '
       << params_.clip_norm << ' ' << params_.standardize << '\n';
    os << std_n_;
    for (double v : std_mean_) os << ' ' << v;
    for (double v : std_m2_) os << ' ' << v;
    os << '\n';
    for (double v : flatten_weights()) os << v << ' ';
    os << '\n';
    return os.str();
}

Mlp Mlp::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string magic;
    std::string version;
    is >> magic >> version;
    if (magic != "mlp" || version != "v1") {
        throw std::invalid_argument("mlp: unknown snapshot format");
    }
    MlpParams p;
    int dim = 0;
    is >> dim >> p.hidden >> p.learning_rate >> p.clip_norm >> p.standardize;
    Rng dummy(0);
    Mlp m(dim, p, dummy);
    is >> m.std_n_;
    for (auto& v : m.std_mean_) is >> v;
    for (auto& v : m.std_m2_) is >> v;
    std::vector<double> flat(m.w1_.size() + m.b1_.size() + m.w2_.size() + 1);
    for (auto& v : flat) is >> v;
    if (!is) throw std::invalid_argument("mlp: truncated snapshot");
    m.set_weights(flat);
    return m;
}

}  // namespace driftbench
