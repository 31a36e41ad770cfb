#include "driftbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "driftbench/d3.hpp"
#include "driftbench/disagreement.hpp"
#include "driftbench/loss_detectors.hpp"

namespace driftbench {

using nlohmann::json;

DetectionScore score_detections(std::span<const std::size_t> events,
                                std::span<const std::size_t> drifts,
                                std::size_t window_len) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i] < events[i - 1]) {
            throw std::invalid_argument("score_detections: events must be sorted ascending");
        }
    }
    std::vector<bool> detected(drifts.size(), false);
    double delay_sum = 0.0;
    std::size_t n_detected = 0;
    int fa = 0;
    for (std::size_t e : events) {
        bool in_any_window = false;
        bool counted = false;
        for (std::size_t d = 0; d < drifts.size(); ++d) {
            if (e >= drifts[d] && e < drifts[d] + window_len) {
                in_any_window = true;
                if (!detected[d]) {
                    detected[d] = true;
                    delay_sum += static_cast<double>(e - drifts[d]);
                    ++n_detected;
                    counted = true;
                    break;  // earliest undetected drift claims the event
                }
            }
        }
        if (!counted) {
            ++fa;
            (void)in_any_window;  // surplus in-window alarms are false alarms too
        }
    }
    DetectionScore s;
    s.fa = fa;
    s.da = drifts.empty() ? 0.0 : static_cast<double>(n_detected) / static_cast<double>(drifts.size());
    if (n_detected > 0) s.mtd = delay_sum / static_cast<double>(n_detected);
    return s;
}

std::vector<ScoredConfig> tuning_score(const std::vector<RunResult>& results) {
    if (results.empty()) throw std::invalid_argument("tuning_score: empty result set");
    std::vector<ScoredConfig> out;
    out.reserve(results.size());
    if (results.size() == 1) {
        const auto& r = results.front();
        out.push_back({r.run_id, 0.0, false, r.da, static_cast<double>(r.fa), r.mtd});
        return out;
    }
    double fa_min = std::numeric_limits<double>::infinity();
    double fa_max = -std::numeric_limits<double>::infinity();
    double mtd_max = -std::numeric_limits<double>::infinity();
    double mtd_min = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        fa_min = std::min(fa_min, static_cast<double>(r.fa));
        fa_max = std::max(fa_max, static_cast<double>(r.fa));
        if (r.mtd) {
            mtd_min = std::min(mtd_min, *r.mtd);
            mtd_max = std::max(mtd_max, *r.mtd);
        }
    }
    if (!std::isfinite(mtd_max)) {  // nothing detected anywhere
        mtd_min = 0.0;
        mtd_max = 0.0;
    }
    auto norm = [](double v, double lo, double hi) {
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;
    };
    for (const auto& r : results) {
        const double mtd_raw = r.mtd ? *r.mtd : mtd_max;  // undetected counts as worst
        const double fa_n = norm(static_cast<double>(r.fa), fa_min, fa_max);
        const double mtd_n = norm(mtd_raw, mtd_min, mtd_max);
        const double score = 0.5 * r.da + 0.3 * (1.0 - fa_n) + 0.2 * (1.0 - mtd_n);
        out.push_back({r.run_id, score, true, r.da, static_cast<double>(r.fa), r.mtd});
    }
    std::sort(out.begin(), out.end(), [](const ScoredConfig& a, const ScoredConfig& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.fingerprint < b.fingerprint;
    });
    return out;
}

ErrorDecomposition error_decomposition(const Predictor& h, const Predictor& h_ref,
                                       std::span<const Instance> batch) {
    if (batch.empty()) throw std::invalid_argument("error_decomposition: empty batch");
    ErrorDecomposition d;
    for (const auto& inst : batch) {
        const int ph = h(inst.x);
        const int pr = h_ref(inst.x);
        d.eps_h += ph != inst.y ? 1.0 : 0.0;
        d.eps_ref += pr != inst.y ? 1.0 : 0.0;
        d.eps_pair += ph != pr ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(batch.size());
    d.eps_h /= n;
    d.eps_ref /= n;
    d.eps_pair /= n;
    d.slack = d.eps_pair + d.eps_ref - d.eps_h;
    return d;
}

std::string fingerprint(const std::string& payload) {
    // FNV-1a, printed as fixed-width hex.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : payload) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

namespace {

LossDetector make_loss_detector(const std::string& kind, const json& p) {
    if (kind == "ddm") {
        Ddm::Params d;
        d.min_instances = p.value("min_instances", d.min_instances);
        d.warning_level = p.value("warning_level", d.warning_level);
        d.drift_level = p.value("drift_level", d.drift_level);
        return Ddm(d);
    }
    if (kind == "eddm") {
        Eddm::Params d;
        d.alpha = p.value("alpha", d.alpha);
        d.beta = p.value("beta", d.beta);
        d.min_errors = p.value("min_errors", d.min_errors);
        return Eddm(d);
    }
    if (kind == "ph") {
        PageHinkley::Params d;
        d.delta = p.value("delta", d.delta);
        d.lambda = p.value("lambda", d.lambda);
        d.min_instances = p.value("min_instances", d.min_instances);
        return PageHinkley(d);
    }
    if (kind == "adwin") {
        Adwin::Params d;
        d.delta = p.value("delta", d.delta);
        d.max_buckets = p.value("max_buckets", d.max_buckets);
        d.clock = p.value("clock", d.clock);
        return Adwin(d);
    }
    if (kind == "hddm_a") {
        HddmA::Params d;
        d.alpha_warning = p.value("alpha_warning", d.alpha_warning);
        d.alpha_drift = p.value("alpha_drift", d.alpha_drift);
        return HddmA(d);
    }
    if (kind == "hddm_w") {
        HddmW::Params d;
        d.lambda = p.value("lambda", d.lambda);
        d.alpha_warning = p.value("alpha_warning", d.alpha_warning);
        d.alpha_drift = p.value("alpha_drift", d.alpha_drift);
        return HddmW(d);
    }
    throw std::invalid_argument("unknown loss detector: " + kind);
}

DisagreementConfig make_disagreement_config(const json& p) {
    DisagreementConfig c;
    c.batch_size = p.value("batch_size", c.batch_size);
    c.q_size = p.value("q_size", c.batch_size / 2);
    c.stride = p.value("stride", c.stride);
    c.alpha = p.value("alpha", c.alpha);
    c.null_replicates = p.value("null_replicates", c.null_replicates);
    c.cooldown = p.value("cooldown", c.cooldown);
    c.flip_fraction = p.value("flip_fraction", c.flip_fraction);
    c.min_window = p.value("min_window", c.min_window);
    const std::string mode = p.value("eval_mode", std::string("own"));
    if (mode == "own") {
        c.eval_mode = EvalMode::OwnWindow;
    } else if (mode == "full") {
        c.eval_mode = EvalMode::FullBatch;
    } else {
        throw std::invalid_argument("disagreement.eval_mode must be 'own' or 'full'");
    }
    const std::string adapt = p.value("adapt_policy", std::string("reset_all"));
    if (adapt == "reset_all") {
        c.adapt_policy = AdaptPolicy::ResetAll;
    } else if (adapt == "reset_fraction") {
        c.adapt_policy = AdaptPolicy::ResetFraction;
    } else if (adapt == "none") {
        c.adapt_policy = AdaptPolicy::None;
    } else {
        throw std::invalid_argument("disagreement.adapt_policy must be reset_all|reset_fraction|none");
    }
    c.reset_fraction = p.value("reset_fraction", c.reset_fraction);
    c.self_train = p.value("self_train", c.self_train);
    c.validate();
    return c;
}

class AccuracyTrace {
public:
    AccuracyTrace(std::size_t window, std::size_t every) : window_(window), every_(every) {}

    void record(std::size_t index, bool correct, std::vector<std::pair<std::size_t, double>>& out) {
        ring_.push_back(correct ? 1 : 0);
        sum_ += ring_.back();
        if (ring_.size() > window_) {
            sum_ -= ring_.front();
            ring_.pop_front();
        }
        total_correct_ += correct ? 1.0 : 0.0;
        ++total_;
        if ((index + 1) % every_ == 0) {
            out.emplace_back(index, sum_ / static_cast<double>(ring_.size()));
        }
    }

    [[nodiscard]] double overall() const {
        return total_ > 0 ? total_correct_ / static_cast<double>(total_) : 0.0;
    }

private:
    std::size_t window_;
    std::size_t every_;
    std::deque<int> ring_;
    double sum_ = 0.0;
    double total_correct_ = 0.0;
    double total_ = 0.0;
};

}  // namespace

RunResult run_prequential(const StreamSpec& stream, const EnsembleConfig& ensemble_cfg,
                          const DetectorConfig& detector_cfg, std::uint64_t seed,
                          const RunOptions& options) {
    const json params = json::parse(detector_cfg.params_json);

    StreamSpec spec = stream;
    spec.seed = Rng::mix(stream.seed, seed);

    EnsembleConfig ecfg = ensemble_cfg;
    ecfg.input_dim = spec.drift.concept_sequence.front().dimension();
    Rng root(seed);
    Ensemble ensemble(ecfg, root.split(1));

    RunResult result;
    result.stream = spec.name;
    result.detector = detector_cfg.kind;
    result.ensemble_type =
        ecfg.kind == LearnerKind::HoeffdingTreeLearner ? "idt" : "mlp";
    result.drift_kind = spec.drift.kind == DriftKind::Abrupt ? "abrupt" : "gradual";
    result.seed = seed;
    {
        json cj;
        cj["stream"] = json::parse(stream_spec_to_json(stream));
        cj["detector"] = {{"kind", detector_cfg.kind}, {"params", params}};
        cj["ensemble"] = {{"type", result.ensemble_type},
                          {"n_members", ecfg.n_members},
                          {"lambda_max", ecfg.lambda_max},
                          {"lambda_floor", ecfg.lambda_floor},
                          {"error_window", ecfg.error_window}};
        cj["labeled"] = options.labeled;
        result.config_json = cj.dump();
        result.run_id = fingerprint(result.config_json + "#" + std::to_string(seed));
    }

    AccuracyTrace trace(options.acc_window, options.acc_every);
    StreamGen gen(spec);

    const std::string& kind = detector_cfg.kind;
    const bool is_loss = kind == "ddm" || kind == "eddm" || kind == "ph" || kind == "adwin" ||
                         kind == "hddm_a" || kind == "hddm_w";

    if (is_loss) {
        LossDetector det = make_loss_detector(kind, params);
        while (!gen.exhausted()) {
            const Instance inst = gen.next();
            const int pred = ensemble.predict(inst.x);
            trace.record(inst.index, pred == inst.y, result.acc_trace);
            ensemble.observe(inst.x, inst.y);
            const double err = pred != inst.y ? 1.0 : 0.0;
            if (detector_update(det, err) == DetectorStatus::Drift) {
                result.detections.push_back(inst.index);
                if (options.adapt_on_drift) ensemble.reset_all();
            }
            ensemble.learn(inst.x, inst.y);
        }
    } else if (kind == "d3") {
        D3Detector::Params dp;
        dp.window = params.value("w", dp.window);
        dp.rho = params.value("rho", dp.rho);
        dp.auc_threshold = params.value("auc_threshold", dp.auc_threshold);
        D3Detector det(dp);
        while (!gen.exhausted()) {
            const Instance inst = gen.next();
            const int pred = ensemble.predict(inst.x);
            trace.record(inst.index, pred == inst.y, result.acc_trace);
            ensemble.observe(inst.x, inst.y);
            if (det.update(inst.x) == DetectorStatus::Drift) {
                result.detections.push_back(inst.index);
                if (options.adapt_on_drift) ensemble.reset_all();
            }
            ensemble.learn(inst.x, inst.y);
        }
    } else if (kind == "disagreement") {
        DisagreementConfig dcfg = make_disagreement_config(params);
        if (options.labeled) dcfg.self_train = false;  // true labels train g instead
        DisagreementDetector det(std::move(ensemble), dcfg, root.split(2).seed());
        while (!gen.exhausted()) {
            const Instance inst = gen.next();
            const int pred = det.ensemble().predict(inst.x);
            trace.record(inst.index, pred == inst.y, result.acc_trace);
            if (const auto decision = det.push(inst.x); decision && decision->drift) {
                result.detections.push_back(inst.index);
            }
            if (options.labeled) {
                det.ensemble().observe(inst.x, inst.y);
                det.ensemble().learn(inst.x, inst.y);
            }
        }
        if (const auto decision = det.finish(); decision && decision->drift) {
            result.detections.push_back(spec.length - 1);
        }
    } else if (kind == "none") {
        while (!gen.exhausted()) {
            const Instance inst = gen.next();
            const int pred = ensemble.predict(inst.x);
            trace.record(inst.index, pred == inst.y, result.acc_trace);
            ensemble.observe(inst.x, inst.y);
            ensemble.learn(inst.x, inst.y);
        }
    } else {
        throw std::invalid_argument("unknown detector kind: " + kind);
    }

    const std::size_t window_len = spec.drift.kind == DriftKind::Abrupt
                                       ? options.window_abrupt
                                       : options.window_gradual;
    const auto score = score_detections(result.detections, spec.drift.positions, window_len);
    result.mtd = score.mtd;
    result.da = score.da;
    result.fa = score.fa;
    result.mean_acc = trace.overall();
    return result;
}

}  // namespace driftbench
