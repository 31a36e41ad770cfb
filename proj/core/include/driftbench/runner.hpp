#ifndef DRIFTBENCH_RUNNER_HPP
#define DRIFTBENCH_RUNNER_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftbench/ensemble.hpp"
#include "driftbench/eval.hpp"
#include "driftbench/stream.hpp"

namespace driftbench {

// Invalid or inconsistent experiment configuration; the CLI maps this to
// exit code 2 with the offending field in the message.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::vector<StreamSpec> streams;
    std::vector<EnsembleConfig> ensembles;
    std::vector<std::string> ensemble_names;  // parallel to ensembles
    std::vector<DetectorConfig> detectors;
    std::vector<DetectorConfig> grid;  // optional tuning candidates
    std::vector<std::uint64_t> seeds;
    RunOptions options;
    std::string out_dir = "out";
    int jobs = 1;
};

// Parses and validates the JSON experiment config; relative stream-file
// references resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& base_dir);

struct ExperimentOutput {
    std::vector<RunResult> results;  // deterministic enumeration order
    int failures = 0;
    std::vector<std::string> failure_messages;
};

// Executes streams x ensembles x detectors x seeds; per-run failures are
// isolated and summarized. jobs > 1 runs independent runs concurrently while
// keeping output order deterministic.
ExperimentOutput execute_runs(const ExperimentConfig& config,
                              const std::vector<DetectorConfig>& detectors);

std::string results_to_csv(const std::vector<RunResult>& results);
std::vector<RunResult> results_from_csv(const std::string& text);
std::string detections_to_jsonl(const std::vector<RunResult>& results);

// Markdown pivot in the MTD(FA) style: one detector block with G and A rows,
// one column per stream; cells average over seeds, "-(FA)" when undetected.
std::string report_from_results(const std::vector<RunResult>& results);

struct SweepOutcome {
    std::string report;            // human-readable per-kind ranking
    std::string best_config_json;  // reusable detectors array
};

SweepOutcome run_sweep(const ExperimentConfig& config);

}  // namespace driftbench

#endif  // DRIFTBENCH_RUNNER_HPP
