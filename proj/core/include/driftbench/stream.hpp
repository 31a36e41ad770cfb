#ifndef DRIFTBENCH_STREAM_HPP
#define DRIFTBENCH_STREAM_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "driftbench/rng.hpp"

namespace driftbench {

struct Instance {
    std::vector<double> x;
    int y = 0;  // binary label
    std::size_t index = 0;
    int concept_id = 0;
};

// --- concept families -------------------------------------------------------

// SEA: 3 uniform features on [0,10], class 1 when x0 + x1 <= threshold.
struct SeaConcept {
    double threshold = 8.0;
};

// Rotating hyperplane: 10 uniform features on [0,1], class 1 when
// w . x >= w0 with w0 = sum(w)/2.
struct HyperplaneConcept {
    std::array<double, 10> weights{};
};

// STAGGER: 3 categorical features coded 0..2 (size, color, shape).
// rule 1: size=small AND color=red; rule 2: color=green OR shape=circle;
// rule 3: size=medium OR size=large.
struct StaggerConcept {
    int rule = 2;
};

// Sine-boundary stream with a contextual regime (amplitude/frequency/level).
// x0 ~ U[0,2pi], x1 ~ U[level - amplitude - 1, level + amplitude + 1],
// class 1 when x1 < level + amplitude * sin(frequency * x0).
struct AnomalySineConcept {
    double amplitude = 1.0;
    double frequency = 1.0;
    double level = 0.0;
};

// RBF: Gaussian centroids with class-labeled centers; x is drawn around a
// weight-sampled centroid and labeled by the nearest center. Centroids are
// derived deterministically from centroid_seed; drift moves them.
struct RbfConcept {
    int dim = 10;
    int n_centroids = 20;
    std::uint64_t centroid_seed = 1;
    double stddev = 0.12;
};

// Agrawal loan functions F1..F10 over the classic 9 attributes
// (salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan).
struct AgrawalConcept {
    int function = 1;
};

struct ConceptParams {
    std::variant<SeaConcept, HyperplaneConcept, StaggerConcept,
                 AnomalySineConcept, RbfConcept, AgrawalConcept>
        params;
    double label_noise = 0.0;  // per-instance flip probability

    [[nodiscard]] std::string family_name() const;
    [[nodiscard]] int dimension() const;
};

enum class DriftKind { Abrupt, Gradual };

struct DriftSpec {
    std::vector<std::size_t> positions;  // strictly increasing
    DriftKind kind = DriftKind::Abrupt;
    std::size_t width = 1000;  // gradual transition width
    std::vector<ConceptParams> concept_sequence;  // |positions| + 1 entries
};

struct StreamSpec {
    std::string name;
    DriftSpec drift;
    std::size_t length = 90000;
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument on violation
};

// --- generation --------------------------------------------------------------

// Applies the concept's deterministic labeling rule to x (noise-free).
int label_for(const ConceptParams& cpt, const std::vector<double>& x);

// Single-owner stateful iterator over a stream spec.
class StreamGen {
public:
    explicit StreamGen(StreamSpec spec);

    [[nodiscard]] bool exhausted() const { return index_ >= spec_.length; }
    Instance next();  // throws std::out_of_range when exhausted

    [[nodiscard]] const StreamSpec& spec() const { return spec_; }

private:
    int active_concept(std::size_t index);

    StreamSpec spec_;
    Rng rng_;
    std::size_t index_ = 0;
};

std::vector<std::size_t> drift_points(const StreamSpec& spec);

// Full stream as a vector; byte-identical across runs for equal seeds.
// Throws std::length_error when spec.length exceeds max_instances.
std::vector<Instance> materialize(const StreamSpec& spec,
                                  std::size_t max_instances = 10'000'000);

// CSV with header f0..fd,label,concept.
std::string to_csv(const std::vector<Instance>& instances);

// JSON (de)serialization of stream specs; schema documented in README.
std::string stream_spec_to_json(const StreamSpec& spec);
StreamSpec stream_spec_from_json(const std::string& text);

// The ten Table-style fixture streams (rbf, rbf2, sea0..2, sinea, sine4,
// sinel, hyp0, hyp1) plus stagger/agrawal, at a configurable scale.
StreamSpec fixture_stream(const std::string& name, DriftKind kind,
                          std::size_t length, std::size_t n_drifts,
                          std::uint64_t seed);
std::vector<std::string> fixture_stream_names();

}  // namespace driftbench

#endif  // DRIFTBENCH_STREAM_HPP
