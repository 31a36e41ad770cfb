#ifndef DRIFTBENCH_MLP_HPP
#define DRIFTBENCH_MLP_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "driftbench/rng.hpp"

namespace driftbench {

struct MlpParams {
    int hidden = 32;
    double learning_rate = 0.01;
    double clip_norm = 5.0;
    bool standardize = true;  // online per-feature standardization of inputs
};

// One-hidden-layer feedforward net: rectifier hidden units, logistic output,
// per-instance SGD on log loss with global-norm gradient clipping. The output
// layer starts at zero so an untrained model predicts exactly 0.5.
class Mlp {
public:
    Mlp(int dim, MlpParams params, Rng& init_rng);

    double predict_proba1(const std::vector<double>& x) const;  // P(y = 1)
    std::array<double, 2> predict_proba(const std::vector<double>& x) const;
    int predict(const std::vector<double>& x) const;  // thresholded at 0.5

    void learn(const std::vector<double>& x, int y);
    void reset(Rng& init_rng);

    // Log loss of a single example at the current weights.
    double loss(const std::vector<double>& x, int y) const;
    // Analytic gradient in the flattened-weight layout (pre-clipping).
    std::vector<double> gradient(const std::vector<double>& x, int y) const;
    std::vector<double> flatten_weights() const;
    void set_weights(const std::vector<double>& flat);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] std::string serialize() const;
    static Mlp deserialize(const std::string& text);

private:
    std::vector<double> standardized(const std::vector<double>& x) const;
    void init_weights(Rng& rng);
    void check_input(const std::vector<double>& x) const;

    MlpParams params_;
    int dim_;
    std::vector<double> w1_;  // hidden x dim, row-major
    std::vector<double> b1_;  // hidden
    std::vector<double> w2_;  // hidden
    double b2_ = 0.0;

    // running standardizer state
    double std_n_ = 0.0;
    std::vector<double> std_mean_;
    std::vector<double> std_m2_;
};

}  // namespace driftbench

#endif  // DRIFTBENCH_MLP_HPP
