#ifndef DRIFTBENCH_D3_HPP
#define DRIFTBENCH_D3_HPP

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "driftbench/loss_detectors.hpp"

namespace driftbench {

// Rank-based (Mann-Whitney) AUC, ties counted half.
// Throws std::invalid_argument unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// D3 discriminative drift detector (Gozuacik et al.): keeps the last
// w(1+rho) feature vectors, fits a logistic discriminator separating the old
// w from the new w*rho, and flags drift when the discriminator's AUC exceeds
// auc_threshold. Label-free: it only ever sees feature vectors.
class D3Detector {
public:
    struct Params {
        std::size_t window = 100;  // w
        double rho = 0.1;
        double auc_threshold = 0.75;
        int max_epochs = 100;
        double learning_rate = 0.1;
    };
    D3Detector() : D3Detector(Params{}) {}
    explicit D3Detector(Params p);

    DetectorStatus update(const std::vector<double>& x);
    void reset();

    [[nodiscard]] std::size_t buffered() const { return buffer_.size(); }
    [[nodiscard]] std::size_t capacity() const {
        return params_.window + new_size();
    }

private:
    [[nodiscard]] std::size_t new_size() const;
    double discriminator_auc() const;

    Params params_;
    std::deque<std::vector<double>> buffer_;
    std::size_t dim_ = 0;
};

}  // namespace driftbench

#endif  // DRIFTBENCH_D3_HPP
