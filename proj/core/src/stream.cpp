#include "driftbench/stream.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace driftbench {

using nlohmann::json;

namespace {

struct RbfCentroid {
    std::vector<double> center;
    double weight;
    int label;
};

std::vector<RbfCentroid> make_centroids(const RbfConcept& c) {
    Rng rng(c.centroid_seed);
    std::vector<RbfCentroid> out(static_cast<std::size_t>(c.n_centroids));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].center.resize(static_cast<std::size_t>(c.dim));
        for (auto& v : out[i].center) v = rng.next_double();
        out[i].weight = 0.2 + 0.8 * rng.next_double();
        out[i].label = static_cast<int>(i % 2);
    }
    return out;
}

int nearest_centroid(const std::vector<RbfCentroid>& centroids,
                     const std::vector<double>& x) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - centroids[i].center[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

int agrawal_group(const AgrawalConcept& c, const std::vector<double>& x) {
    const double salary = x[0];
    const double commission = x[1];
    const double age = x[2];
    const double elevel = x[3];
    const double hvalue = x[6];
    const double hyears = x[7];
    const double loan = x[8];
    const double total = salary + commission;

    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };

    switch (c.function) {
        case 1:
            return (age < 40 || age >= 60) ? 1 : 0;
        case 2:
            if (age < 40) return in(salary, 50000, 100000) ? 1 : 0;
            if (age < 60) return in(salary, 75000, 125000) ? 1 : 0;
            return in(salary, 25000, 75000) ? 1 : 0;
        case 3:
            if (age < 40) return in(elevel, 0, 1) ? 1 : 0;
            if (age < 60) return in(elevel, 1, 3) ? 1 : 0;
            return in(elevel, 2, 4) ? 1 : 0;
        case 4:
            if (age < 40)
                return (in(elevel, 0, 1) ? in(salary, 25000, 75000) : in(salary, 50000, 100000)) ? 1 : 0;
            if (age < 60)
                return (in(elevel, 1, 3) ? in(salary, 50000, 100000) : in(salary, 75000, 125000)) ? 1 : 0;
            return (in(elevel, 2, 4) ? in(salary, 50000, 100000) : in(salary, 25000, 75000)) ? 1 : 0;
        case 5:
            if (age < 40)
                return (in(salary, 50000, 100000) ? in(loan, 100000, 300000) : in(loan, 200000, 400000)) ? 1 : 0;
            if (age < 60)
                return (in(salary, 75000, 125000) ? in(loan, 200000, 400000) : in(loan, 300000, 500000)) ? 1 : 0;
            return (in(salary, 25000, 75000) ? in(loan, 300000, 500000) : in(loan, 100000, 300000)) ? 1 : 0;
        case 6:
            if (age < 40) return in(total, 25000, 75000) ? 1 : 0;
            if (age < 60) return in(total, 50000, 100000) ? 1 : 0;
            return in(total, 25000, 75000) ? 1 : 0;
        case 7:
            return (2.0 * total / 3.0 - loan / 5.0 - 20000.0 > 0.0) ? 1 : 0;
        case 8:
            return (2.0 * total / 3.0 - 5000.0 * elevel - 20000.0 > 0.0) ? 1 : 0;
        case 9:
            return (2.0 * total / 3.0 - 5000.0 * elevel - loan / 5.0 - 10000.0 > 0.0) ? 1 : 0;
        case 10: {
            const double equity = hyears < 20 ? 0.0 : hvalue * (hyears - 20.0) / 10.0;
            return (2.0 * total / 3.0 - 5000.0 * elevel + equity / 5.0 - 10000.0 > 0.0) ? 1 : 0;
        }
        default:
            throw std::invalid_argument("agrawal: function must be 1..10");
    }
}

}  // namespace

std::string ConceptParams::family_name() const {
    struct V {
        std::string operator()(const SeaConcept&) const { return "sea"; }
        std::string operator()(const HyperplaneConcept&) const { return "hyperplane"; }
        std::string operator()(const StaggerConcept&) const { return "stagger"; }
        std::string operator()(const AnomalySineConcept&) const { return "anomaly_sine"; }
        std::string operator()(const RbfConcept&) const { return "rbf"; }
        std::string operator()(const AgrawalConcept&) const { return "agrawal"; }
    };
    return std::visit(V{}, params);
}

int ConceptParams::dimension() const {
    struct V {
        int operator()(const SeaConcept&) const { return 3; }
        int operator()(const HyperplaneConcept&) const { return 10; }
        int operator()(const StaggerConcept&) const { return 3; }
        int operator()(const AnomalySineConcept&) const { return 2; }
        int operator()(const RbfConcept& c) const { return c.dim; }
        int operator()(const AgrawalConcept&) const { return 9; }
    };
    return std::visit(V{}, params);
}

void StreamSpec::validate() const {
    if (drift.concept_sequence.empty()) {
        throw std::invalid_argument("stream spec: concept_sequence must be non-empty");
    }
    if (drift.concept_sequence.size() != drift.positions.size() + 1) {
        throw std::invalid_argument("stream spec: |concept_sequence| must equal |positions| + 1");
    }
    for (std::size_t i = 1; i < drift.positions.size(); ++i) {
        if (drift.positions[i] <= drift.positions[i - 1]) {
            throw std::invalid_argument("stream spec: positions must be strictly increasing");
        }
    }
    for (std::size_t p : drift.positions) {
        if (p >= length) throw std::invalid_argument("stream spec: drift position beyond length");
    }
    if (drift.kind == DriftKind::Gradual && drift.width == 0) {
        throw std::invalid_argument("stream spec: gradual drift requires width > 0");
    }
    const int dim = drift.concept_sequence.front().dimension();
    const std::string fam = drift.concept_sequence.front().family_name();
    for (const auto& c : drift.concept_sequence) {
        if (c.dimension() != dim || c.family_name() != fam) {
            throw std::invalid_argument("stream spec: concepts must share family and dimension");
        }
    }
}

int label_for(const ConceptParams& cpt, const std::vector<double>& x) {
    struct V {
        const std::vector<double>& x;
        int operator()(const SeaConcept& c) const { return (x[0] + x[1] <= c.threshold) ? 1 : 0; }
        int operator()(const HyperplaneConcept& c) const {
            double dot = 0.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < c.weights.size(); ++i) {
                dot += c.weights[i] * x[i];
                sum += c.weights[i];
            }
            return (dot >= sum / 2.0) ? 1 : 0;
        }
        int operator()(const StaggerConcept& c) const {
            const int size = static_cast<int>(x[0]);
            const int color = static_cast<int>(x[1]);
            const int shape = static_cast<int>(x[2]);
            switch (c.rule) {
                case 1: return (size == 0 && color == 0) ? 1 : 0;
                case 2: return (color == 1 || shape == 0) ? 1 : 0;
                case 3: return (size == 1 || size == 2) ? 1 : 0;
                default: throw std::invalid_argument("stagger: rule must be 1..3");
            }
        }
        int operator()(const AnomalySineConcept& c) const {
            return (x[1] < c.level + c.amplitude * std::sin(c.frequency * x[0])) ? 1 : 0;
        }
        int operator()(const RbfConcept& c) const {
            const auto centroids = make_centroids(c);
            return centroids[static_cast<std::size_t>(nearest_centroid(centroids, x))].label;
        }
        int operator()(const AgrawalConcept& c) const { return agrawal_group(c, x); }
    };
    return std::visit(V{x}, cpt.params);
}

StreamGen::StreamGen(StreamSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
    spec_.validate();
}

int StreamGen::active_concept(std::size_t index) {
    const auto& d = spec_.drift;
    if (d.kind == DriftKind::Abrupt) {
        int c = 0;
        for (std::size_t p : d.positions) {
            if (index >= p) ++c;
        }
        return c;
    }
    // Gradual: successive sigmoid transitions; the instance advances past
    // position p_j with probability 1/(1+exp(-4(i-p_j)/w)).
    int c = 0;
    for (std::size_t j = 0; j < d.positions.size(); ++j) {
        const double t = (static_cast<double>(index) - static_cast<double>(d.positions[j])) * 4.0 /
                         static_cast<double>(d.width);
        const double p_new = 1.0 / (1.0 + std::exp(-t));
        if (rng_.next_double() < p_new) {
            c = static_cast<int>(j) + 1;
        } else {
            break;
        }
    }
    return c;
}

Instance StreamGen::next() {
    if (exhausted()) throw std::out_of_range("stream exhausted");
    const int concept_id = active_concept(index_);
    const auto& cpt = spec_.drift.concept_sequence[static_cast<std::size_t>(concept_id)];

    Instance inst;
    inst.index = index_++;
    inst.concept_id = concept_id;

    struct Gen {
        Rng& rng;
        std::vector<double> operator()(const SeaConcept&) const {
            return {rng.next_double() * 10.0, rng.next_double() * 10.0, rng.next_double() * 10.0};
        }
        std::vector<double> operator()(const HyperplaneConcept&) const {
            std::vector<double> x(10);
            for (auto& v : x) v = rng.next_double();
            return x;
        }
        std::vector<double> operator()(const StaggerConcept&) const {
            return {static_cast<double>(rng.next_below(3)), static_cast<double>(rng.next_below(3)),
                    static_cast<double>(rng.next_below(3))};
        }
        std::vector<double> operator()(const AnomalySineConcept& c) const {
            const double x0 = rng.next_double() * 6.283185307179586;
            const double lo = c.level - c.amplitude - 1.0;
            const double hi = c.level + c.amplitude + 1.0;
            const double x1 = lo + (hi - lo) * rng.next_double();
            return {x0, x1};
        }
        std::vector<double> operator()(const RbfConcept& c) const {
            const auto centroids = make_centroids(c);
            double total_w = 0.0;
            for (const auto& cc : centroids) total_w += cc.weight;
            double u = rng.next_double() * total_w;
            std::size_t pick = 0;
            for (; pick + 1 < centroids.size(); ++pick) {
                u -= centroids[pick].weight;
                if (u <= 0.0) break;
            }
            std::vector<double> x(centroids[pick].center);
            for (auto& v : x) v += rng.next_gaussian() * c.stddev;
            return x;
        }
        std::vector<double> operator()(const AgrawalConcept&) const {
            std::vector<double> x(9);
            x[0] = 20000.0 + 130000.0 * rng.next_double();             // salary
            x[1] = x[0] >= 75000.0 ? 0.0 : 10000.0 + 65000.0 * rng.next_double();  // commission
            x[2] = static_cast<double>(20 + rng.next_below(61));       // age 20..80
            x[3] = static_cast<double>(rng.next_below(5));             // elevel 0..4
            x[4] = static_cast<double>(1 + rng.next_below(20));        // car
            x[5] = static_cast<double>(rng.next_below(9));             // zipcode 0..8
            x[6] = (9.0 - x[5]) * 30000.0 + 50000.0 + 50000.0 * rng.next_double();  // hvalue
            x[7] = static_cast<double>(1 + rng.next_below(30));        // hyears
            x[8] = 500000.0 * rng.next_double();                       // loan
            return x;
        }
    };
    inst.x = std::visit(Gen{rng_}, cpt.params);
    inst.y = label_for(cpt, inst.x);
    if (cpt.label_noise > 0.0 && rng_.next_double() < cpt.label_noise) {
        inst.y = 1 - inst.y;
    }
    return inst;
}

std::vector<std::size_t> drift_points(const StreamSpec& spec) {
    return spec.drift.positions;
}

std::vector<Instance> materialize(const StreamSpec& spec, std::size_t max_instances) {
    if (spec.length > max_instances) {
        throw std::length_error("materialize: stream length exceeds configured cap");
    }
    StreamGen gen(spec);
    std::vector<Instance> out;
    out.reserve(spec.length);
    while (!gen.exhausted()) out.push_back(gen.next());
    return out;
}

std::string to_csv(const std::vector<Instance>& instances) {
    std::ostringstream os;
    if (instances.empty()) return "";
    os.precision(17);
    const std::size_t d = instances.front().x.size();
    for (std::size_t j = 0; j < d; ++j) os << 'f' << j << ',';
    os << "label,concept\n";
    for (const auto& inst : instances) {
        for (double v : inst.x) os << v << ',';
        os << inst.y << ',' << inst.concept_id << '\n';
    }
    return os.str();
}

// --- JSON schema -------------------------------------------------------------

namespace {

json concept_to_json(const ConceptParams& c) {
    json j;
    j["family"] = c.family_name();
    if (c.label_noise > 0.0) j["label_noise"] = c.label_noise;
    struct V {
        json& j;
        void operator()(const SeaConcept& s) const { j["threshold"] = s.threshold; }
        void operator()(const HyperplaneConcept& h) const { j["weights"] = h.weights; }
        void operator()(const StaggerConcept& s) const { j["rule"] = s.rule; }
        void operator()(const AnomalySineConcept& s) const {
            j["amplitude"] = s.amplitude;
            j["frequency"] = s.frequency;
            j["level"] = s.level;
        }
        void operator()(const RbfConcept& r) const {
            j["dim"] = r.dim;
            j["n_centroids"] = r.n_centroids;
            j["centroid_seed"] = r.centroid_seed;
            j["stddev"] = r.stddev;
        }
        void operator()(const AgrawalConcept& a) const { j["function"] = a.function; }
    };
    std::visit(V{j}, c.params);
    return j;
}

ConceptParams concept_from_json(const json& j) {
    ConceptParams c;
    const std::string family = j.at("family").get<std::string>();
    if (family == "sea") {
        c.params = SeaConcept{j.at("threshold").get<double>()};
    } else if (family == "hyperplane") {
        HyperplaneConcept h;
        h.weights = j.at("weights").get<std::array<double, 10>>();
        c.params = h;
    } else if (family == "stagger") {
        c.params = StaggerConcept{j.at("rule").get<int>()};
    } else if (family == "anomaly_sine") {
        c.params = AnomalySineConcept{j.at("amplitude").get<double>(), j.at("frequency").get<double>(),
                                      j.at("level").get<double>()};
    } else if (family == "rbf") {
        c.params = RbfConcept{j.at("dim").get<int>(), j.at("n_centroids").get<int>(),
                              j.at("centroid_seed").get<std::uint64_t>(), j.at("stddev").get<double>()};
    } else if (family == "agrawal") {
        c.params = AgrawalConcept{j.at("function").get<int>()};
    } else {
        throw std::invalid_argument("unknown concept family: " + family);
    }
    c.label_noise = j.value("label_noise", 0.0);
    return c;
}

}  // namespace

std::string stream_spec_to_json(const StreamSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["length"] = spec.length;
    j["seed"] = spec.seed;
    j["drift"]["kind"] = spec.drift.kind == DriftKind::Abrupt ? "abrupt" : "gradual";
    j["drift"]["positions"] = spec.drift.positions;
    j["drift"]["width"] = spec.drift.width;
    j["drift"]["concepts"] = json::array();
    for (const auto& c : spec.drift.concept_sequence) {
        j["drift"]["concepts"].push_back(concept_to_json(c));
    }
    return j.dump(2);
}

StreamSpec stream_spec_from_json(const std::string& text) {
    const json j = json::parse(text);
    StreamSpec spec;
    spec.name = j.value("name", "stream");
    spec.length = j.at("length").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    const auto& d = j.at("drift");
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "abrupt") {
        spec.drift.kind = DriftKind::Abrupt;
    } else if (kind == "gradual") {
        spec.drift.kind = DriftKind::Gradual;
    } else {
        throw std::invalid_argument("drift.kind must be 'abrupt' or 'gradual'");
    }
    spec.drift.positions = d.at("positions").get<std::vector<std::size_t>>();
    spec.drift.width = d.value("width", std::size_t{1000});
    for (const auto& cj : d.at("concepts")) {
        spec.drift.concept_sequence.push_back(concept_from_json(cj));
    }
    spec.validate();
    return spec;
}

// --- fixtures ----------------------------------------------------------------

std::vector<std::string> fixture_stream_names() {
    return {"rbf", "rbf2", "sea0", "sea1", "sea2", "sinea",
            "sine4", "sinel", "hyp0", "hyp1", "stagger", "agrawal"};
}

StreamSpec fixture_stream(const std::string& name, DriftKind kind, std::size_t length,
                          std::size_t n_drifts, std::uint64_t seed) {
    StreamSpec spec;
    spec.name = name;
    spec.length = length;
    spec.seed = seed;
    spec.drift.kind = kind;
    spec.drift.width = std::max<std::size_t>(1, length / 90);  // 1,000 at the paper's 90,000 scale
    const std::size_t gap = length / (n_drifts + 1);
    for (std::size_t j = 1; j <= n_drifts; ++j) spec.drift.positions.push_back(j * gap);

    auto cycle = [&](const std::vector<ConceptParams>& base) {
        for (std::size_t j = 0; j <= n_drifts; ++j) {
            spec.drift.concept_sequence.push_back(base[j % base.size()]);
        }
    };
    auto sea = [](double t) { return ConceptParams{SeaConcept{t}}; };
    auto sine = [](double a, double f, double l) {
        return ConceptParams{AnomalySineConcept{a, f, l}};
    };
    auto hyp = [](std::uint64_t cseed) {
        HyperplaneConcept h;
        Rng r(cseed);
        for (auto& w : h.weights) w = -1.0 + 2.0 * r.next_double();
        return ConceptParams{h};
    };
    auto rbf = [](int k, std::uint64_t cseed, double sd) {
        return ConceptParams{RbfConcept{10, k, cseed, sd}};
    };

    if (name == "sea0") {
        cycle({sea(8.0), sea(12.0)});
    } else if (name == "sea1") {
        cycle({sea(7.0), sea(13.0)});
    } else if (name == "sea2") {
        cycle({sea(9.0), sea(11.0)});
    } else if (name == "sinea") {
        cycle({sine(1.0, 1.0, 0.0), sine(2.5, 1.0, 0.0)});
    } else if (name == "sine4") {
        cycle({sine(1.0, 1.0, 0.0), sine(1.0, 4.0, 0.0)});
    } else if (name == "sinel") {
        cycle({sine(1.0, 1.0, 0.0), sine(1.0, 1.0, 1.5)});
    } else if (name == "hyp0") {
        cycle({hyp(101), hyp(202)});
    } else if (name == "hyp1") {
        cycle({hyp(303), hyp(404)});
    } else if (name == "rbf") {
        cycle({rbf(20, 11, 0.12), rbf(20, 12, 0.12)});
    } else if (name == "rbf2") {
        cycle({rbf(35, 21, 0.25), rbf(35, 22, 0.25)});
    } else if (name == "stagger") {
        cycle({ConceptParams{StaggerConcept{2}}, ConceptParams{StaggerConcept{3}}});
    } else if (name == "agrawal") {
        cycle({ConceptParams{AgrawalConcept{1}}, ConceptParams{AgrawalConcept{3}}});
    } else {
        throw std::invalid_argument("unknown fixture stream: " + name);
    }
    spec.validate();
    return spec;
}

}  // namespace driftbench
