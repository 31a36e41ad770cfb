#include "driftbench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace driftbench {

using nlohmann::json;

namespace {

StreamSpec stream_from_entry(const json& entry, const std::string& base_dir) {
    if (entry.contains("file")) {
        std::filesystem::path p = entry.at("file").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("streams[].file: cannot open " + p.string());
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            return stream_spec_from_json(buf.str());
        } catch (const std::exception& e) {
            throw ConfigError("streams[].file " + p.string() + ": " + e.what());
        }
    }
    if (entry.contains("fixture")) {
        const std::string name = entry.at("fixture").get<std::string>();
        const std::string kind_s = entry.value("kind", std::string("abrupt"));
        if (kind_s != "abrupt" && kind_s != "gradual") {
            throw ConfigError("streams[].kind must be 'abrupt' or 'gradual'");
        }
        const DriftKind kind = kind_s == "abrupt" ? DriftKind::Abrupt : DriftKind::Gradual;
        const auto length = entry.value("length", std::size_t{90000});
        const auto n_drifts = entry.value("n_drifts", std::size_t{5});
        const auto seed = entry.value("seed", std::uint64_t{1});
        try {
            return fixture_stream(name, kind, length, n_drifts, seed);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("streams[].fixture: ") + e.what());
        }
    }
    throw ConfigError("streams[] entries need either 'file' or 'fixture'");
}

EnsembleConfig ensemble_from_entry(const json& entry) {
    EnsembleConfig c;
    const std::string type = entry.value("type", std::string("idt"));
    if (type == "idt") {
        c.kind = LearnerKind::HoeffdingTreeLearner;
    } else if (type == "mlp") {
        c.kind = LearnerKind::MlpLearner;
    } else {
        throw ConfigError("ensembles[].type must be 'idt' or 'mlp'");
    }
    c.n_members = entry.value("n_members", c.n_members);
    if (c.n_members < 1) throw ConfigError("ensembles[].n_members must be >= 1");
    c.lambda_max = entry.value("lambda_max", c.lambda_max);
    c.lambda_floor = entry.value("lambda_floor", c.lambda_floor);
    c.error_window = entry.value("error_window", c.error_window);
    if (entry.contains("ht")) {
        const auto& h = entry.at("ht");
        c.ht.grace_period = h.value("grace_period", c.ht.grace_period);
        c.ht.split_confidence = h.value("split_confidence", c.ht.split_confidence);
        c.ht.tie_threshold = h.value("tie_threshold", c.ht.tie_threshold);
        c.ht.naive_bayes_leaves = h.value("naive_bayes_leaves", c.ht.naive_bayes_leaves);
    }
    if (entry.contains("mlp")) {
        const auto& m = entry.at("mlp");
        c.mlp.hidden = m.value("hidden", c.mlp.hidden);
        c.mlp.learning_rate = m.value("learning_rate", c.mlp.learning_rate);
        c.mlp.clip_norm = m.value("clip_norm", c.mlp.clip_norm);
    }
    return c;
}

const std::vector<std::string> kKnownDetectors = {
    "ddm", "eddm", "ph", "adwin", "hddm_a", "hddm_w", "d3", "disagreement", "none"};

DetectorConfig detector_from_entry(const json& entry) {
    DetectorConfig d;
    d.kind = entry.value("kind", std::string());
    if (std::find(kKnownDetectors.begin(), kKnownDetectors.end(), d.kind) ==
        kKnownDetectors.end()) {
        throw ConfigError("detectors[].kind: unknown detector '" + d.kind + "'");
    }
    d.params_json = entry.value("params", json::object()).dump();
    return d;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    if (!j.contains("streams") || j.at("streams").empty()) {
        throw ConfigError("streams: at least one stream is required");
    }
    for (const auto& e : j.at("streams")) cfg.streams.push_back(stream_from_entry(e, base_dir));

    if (!j.contains("ensembles") || j.at("ensembles").empty()) {
        throw ConfigError("ensembles: at least one ensemble is required");
    }
    for (const auto& e : j.at("ensembles")) {
        cfg.ensembles.push_back(ensemble_from_entry(e));
        cfg.ensemble_names.push_back(e.value("type", std::string("idt")));
    }

    if (!j.contains("detectors") || j.at("detectors").empty()) {
        throw ConfigError("detectors: at least one detector is required");
    }
    for (const auto& e : j.at("detectors")) cfg.detectors.push_back(detector_from_entry(e));

    for (const auto& e : j.value("grid", json::array())) {
        cfg.grid.push_back(detector_from_entry(e));
    }

    cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    if (cfg.seeds.empty()) throw ConfigError("seeds: a non-empty seed list is required");

    if (j.contains("options")) {
        const auto& o = j.at("options");
        cfg.options.window_abrupt = o.value("window_abrupt", cfg.options.window_abrupt);
        cfg.options.window_gradual = o.value("window_gradual", cfg.options.window_gradual);
        cfg.options.labeled = o.value("labeled", cfg.options.labeled);
        cfg.options.adapt_on_drift = o.value("adapt_on_drift", cfg.options.adapt_on_drift);
        cfg.options.acc_window = o.value("acc_window", cfg.options.acc_window);
        cfg.options.acc_every = o.value("acc_every", cfg.options.acc_every);
    }
    cfg.out_dir = j.value("out", std::string("out"));
    cfg.jobs = j.value("jobs", 1);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str(),
                                   std::filesystem::path(path).parent_path().string());
}

ExperimentOutput execute_runs(const ExperimentConfig& config,
                              const std::vector<DetectorConfig>& detectors) {
    struct RunTask {
        std::size_t stream;
        std::size_t ensemble;
        std::size_t detector;
        std::uint64_t seed;
    };
    std::vector<RunTask> tasks;
    for (std::size_t s = 0; s < config.streams.size(); ++s) {
        for (std::size_t e = 0; e < config.ensembles.size(); ++e) {
            for (std::size_t d = 0; d < detectors.size(); ++d) {
                for (std::uint64_t seed : config.seeds) tasks.push_back({s, e, d, seed});
            }
        }
    }

    ExperimentOutput out;
    out.results.resize(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const auto& t = tasks[i];
            try {
                out.results[i] = run_prequential(config.streams[t.stream],
                                                 config.ensembles[t.ensemble],
                                                 detectors[t.detector], t.seed, config.options);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Drop failed runs while keeping deterministic order of the survivors.
    std::vector<RunResult> kept;
    kept.reserve(out.results.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (errors[i].empty()) {
            kept.push_back(std::move(out.results[i]));
        } else {
            ++out.failures;
            out.failure_messages.push_back(errors[i]);
        }
    }
    out.results = std::move(kept);
    return out;
}

namespace {

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::string results_to_csv(const std::vector<RunResult>& results) {
    std::ostringstream os;
    os << "run_id,stream,detector,ensemble_type,drift_kind,mtd,da,fa,mean_acc,seed,config_json\n";
    for (const auto& r : results) {
        os << r.run_id << ',' << r.stream << ',' << r.detector << ',' << r.ensemble_type << ','
           << r.drift_kind << ',';
        if (r.mtd) os << format_double(*r.mtd);
        os << ',' << format_double(r.da) << ',' << r.fa << ',' << format_double(r.mean_acc) << ','
           << r.seed << ',' << csv_quote(r.config_json) << '\n';
    }
    return os.str();
}

std::vector<RunResult> results_from_csv(const std::string& text) {
    std::vector<RunResult> out;
    std::size_t pos = 0;

    auto read_row = [&](std::vector<std::string>& fields) -> bool {
        fields.clear();
        if (pos >= text.size()) return false;
        std::string cur;
        bool quoted = false;
        while (pos < text.size()) {
            const char c = text[pos++];
            if (quoted) {
                if (c == '"') {
                    if (pos < text.size() && text[pos] == '"') {
                        cur += '"';
                        ++pos;
                    } else {
                        quoted = false;
                    }
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(cur));
                cur.clear();
            } else if (c == '\n') {
                fields.push_back(std::move(cur));
                return true;
            } else {
                cur += c;
            }
        }
        fields.push_back(std::move(cur));
        return true;
    };

    std::vector<std::string> header;
    if (!read_row(header)) return out;
    const std::vector<std::string> expected = {"run_id", "stream", "detector", "ensemble_type",
                                               "drift_kind", "mtd", "da", "fa", "mean_acc",
                                               "seed", "config_json"};
    for (const auto& col : expected) {
        if (std::find(header.begin(), header.end(), col) == header.end()) {
            throw std::invalid_argument("results csv: missing column '" + col + "'");
        }
    }
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i) idx[header[i]] = i;

    std::vector<std::string> row;
    while (read_row(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        RunResult r;
        r.run_id = row[idx["run_id"]];
        r.stream = row[idx["stream"]];
        r.detector = row[idx["detector"]];
        r.ensemble_type = row[idx["ensemble_type"]];
        r.drift_kind = row[idx["drift_kind"]];
        if (!row[idx["mtd"]].empty()) r.mtd = std::stod(row[idx["mtd"]]);
        r.da = std::stod(row[idx["da"]]);
        r.fa = std::stoi(row[idx["fa"]]);
        r.mean_acc = std::stod(row[idx["mean_acc"]]);
        r.seed = std::stoull(row[idx["seed"]]);
        r.config_json = row[idx["config_json"]];
        out.push_back(std::move(r));
    }
    return out;
}

std::string detections_to_jsonl(const std::vector<RunResult>& results) {
    std::ostringstream os;
    for (const auto& r : results) {
        for (std::size_t d : r.detections) {
            json j;
            j["run_id"] = r.run_id;
            j["stream"] = r.stream;
            j["detector"] = r.detector;
            j["ensemble_type"] = r.ensemble_type;
            j["drift_kind"] = r.drift_kind;
            j["seed"] = r.seed;
            j["index"] = d;
            os << j.dump() << '\n';
        }
    }
    return os.str();
}

std::string report_from_results(const std::vector<RunResult>& results) {
    // keys: (detector, ensemble_type) -> drift kind -> stream -> seed results
    struct Cell {
        std::vector<double> mtds;  // defined MTDs only
        std::vector<int> fas;
    };
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::map<std::string, Cell>>>
        pivot;
    std::vector<std::string> stream_order;
    for (const auto& r : results) {
        auto& cell = pivot[{r.detector, r.ensemble_type}][r.drift_kind][r.stream];
        if (r.mtd) cell.mtds.push_back(*r.mtd);
        cell.fas.push_back(r.fa);
        if (std::find(stream_order.begin(), stream_order.end(), r.stream) == stream_order.end()) {
            stream_order.push_back(r.stream);
        }
    }

    std::ostringstream os;
    os << "| Method | T |";
    for (const auto& s : stream_order) os << ' ' << s << " |";
    os << '\n';
    os << "|---|---|";
    for (std::size_t i = 0; i < stream_order.size(); ++i) os << "---|";
    os << '\n';

    for (const auto& [key, kinds] : pivot) {
        const std::string method = key.first + "/" + key.second;
        for (const char* kind : {"gradual", "abrupt"}) {
            const auto it = kinds.find(kind);
            if (it == kinds.end()) continue;
            os << "| " << method << " | " << (kind[0] == 'g' ? 'G' : 'A') << " |";
            for (const auto& s : stream_order) {
                const auto cit = it->second.find(s);
                if (cit == it->second.end()) {
                    os << " |";
                    continue;
                }
                const auto& cell = cit->second;
                double fa_mean = 0.0;
                for (int f : cell.fas) fa_mean += f;
                fa_mean /= static_cast<double>(cell.fas.size());
                os << ' ';
                if (cell.mtds.empty()) {
                    os << '-';
                } else {
                    double m = 0.0;
                    for (double v : cell.mtds) m += v;
                    m /= static_cast<double>(cell.mtds.size());
                    os << static_cast<long long>(std::llround(m));
                }
                os << '(' << static_cast<long long>(std::llround(fa_mean)) << ") |";
            }
            os << '\n';
        }
    }
    return os.str();
}

SweepOutcome run_sweep(const ExperimentConfig& config) {
    if (config.grid.empty()) throw ConfigError("grid: tuning sweep requires a non-empty grid");

    SweepOutcome outcome;
    std::ostringstream report;
    json best_detectors = json::array();

    // Group candidates by detector kind; rank within each family.
    std::map<std::string, std::vector<DetectorConfig>> by_kind;
    for (const auto& d : config.grid) by_kind[d.kind].push_back(d);

    for (const auto& [kind, candidates] : by_kind) {
        std::vector<RunResult> aggregated;
        std::vector<DetectorConfig> ordered(candidates);
        for (const auto& cand : ordered) {
            const auto runs = execute_runs(config, {cand});
            // Average the per-run metrics into one synthetic result per config.
            RunResult agg;
            agg.run_id = fingerprint(cand.kind + cand.params_json);
            agg.detector = cand.kind;
            agg.config_json = cand.params_json;
            double da = 0.0;
            double fa = 0.0;
            double mtd = 0.0;
            std::size_t mtd_n = 0;
            for (const auto& r : runs.results) {
                da += r.da;
                fa += r.fa;
                if (r.mtd) {
                    mtd += *r.mtd;
                    ++mtd_n;
                }
            }
            const auto n = static_cast<double>(runs.results.size());
            if (n > 0) {
                agg.da = da / n;
                agg.fa = static_cast<int>(std::llround(fa / n));
                if (mtd_n > 0) agg.mtd = mtd / static_cast<double>(mtd_n);
            }
            aggregated.push_back(std::move(agg));
        }

        const auto ranked = tuning_score(aggregated);
        std::map<std::string, std::string> params_by_id;
        for (const auto& cand : ordered) {
            params_by_id[fingerprint(cand.kind + cand.params_json)] = cand.params_json;
        }
        report << "## " << kind << "\n\n";
        if (ranked.size() == 1) {
            report << "single candidate, score undefined (passthrough)\n\n";
        }
        for (const auto& rc : ranked) {
            report << "- config " << rc.fingerprint << ' ' << params_by_id[rc.fingerprint]
                   << ": score ";
            if (rc.score_defined) report << rc.score;
            else report << "n/a";
            report << " (DA " << rc.da << ", FA " << rc.fa << ", MTD "
                   << (rc.mtd ? std::to_string(*rc.mtd) : std::string("-")) << ")\n";
        }
        report << '\n';

        const std::string& winner_id = ranked.front().fingerprint;
        for (const auto& cand : ordered) {
            if (fingerprint(cand.kind + cand.params_json) == winner_id) {
                json e;
                e["kind"] = cand.kind;
                e["params"] = json::parse(cand.params_json);
                best_detectors.push_back(e);
                break;
            }
        }
    }

    json best;
    best["detectors"] = best_detectors;
    outcome.best_config_json = best.dump(2);
    outcome.report = report.str();
    return outcome;
}

}  // namespace driftbench
