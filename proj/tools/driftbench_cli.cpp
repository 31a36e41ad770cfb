// driftbench command-line front end: run experiments, sweep hyperparameters,
// render reports, and materialize streams to CSV.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "driftbench/runner.hpp"
#include "driftbench/stream.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string resolve_out_dir(const std::string& flag_value, const std::string& config_value) {
    if (const char* env = std::getenv("DRIFTBENCH_OUT"); env && *env) return env;
    if (!flag_value.empty()) return flag_value;
    return config_value;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftbench: streaming drift-detection benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    int jobs = 0;
    std::uint64_t seed_offset = 0;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")
            ->required(config_required);
        cmd->add_option("--out", out_flag, "output directory (env DRIFTBENCH_OUT overrides)");
        cmd->add_option("--jobs", jobs, "max concurrent runs");
        cmd->add_option("--seed-offset", seed_offset, "added to every configured seed");
    };

    auto* cmd_run = app.add_subcommand("run", "execute all configured runs");
    add_common(cmd_run, true);

    auto* cmd_sweep = app.add_subcommand("sweep", "rank tuning-grid configs and emit the winner");
    add_common(cmd_sweep, true);

    std::string results_path;
    auto* cmd_report = app.add_subcommand("report", "pivot a results.csv into an MTD(FA) table");
    cmd_report->add_option("--results", results_path, "path to results.csv")->required();
    cmd_report->add_option("--out", out_flag, "output directory (env DRIFTBENCH_OUT overrides)");

    std::string gen_stream;
    std::string gen_fixture;
    std::string gen_kind = "abrupt";
    std::size_t gen_length = 90000;
    std::size_t gen_drifts = 5;
    std::uint64_t gen_seed = 1;
    auto* cmd_gen = app.add_subcommand("gen", "materialize a stream to CSV");
    cmd_gen->add_option("--spec", gen_stream, "stream spec file (JSON)");
    cmd_gen->add_option("--fixture", gen_fixture, "built-in fixture stream name");
    cmd_gen->add_option("--kind", gen_kind, "abrupt|gradual (fixture mode)");
    cmd_gen->add_option("--length", gen_length, "stream length (fixture mode)");
    cmd_gen->add_option("--n-drifts", gen_drifts, "drift count (fixture mode)");
    cmd_gen->add_option("--seed", gen_seed, "stream seed (fixture mode)");
    cmd_gen->add_option("--out", out_flag, "output directory (env DRIFTBENCH_OUT overrides)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) {
            driftbench::StreamSpec spec;
            if (!gen_stream.empty()) {
                spec = driftbench::stream_spec_from_json(read_file(gen_stream));
            } else if (!gen_fixture.empty()) {
                const auto kind = gen_kind == "gradual" ? driftbench::DriftKind::Gradual
                                                        : driftbench::DriftKind::Abrupt;
                spec = driftbench::fixture_stream(gen_fixture, kind, gen_length, gen_drifts,
                                                  gen_seed);
            } else {
                std::cerr << "gen: provide --spec or --fixture\n";
                return kExitConfig;
            }
            const std::string dir = resolve_out_dir(out_flag, "out");
            std::filesystem::create_directories(dir);
            const auto path = std::filesystem::path(dir) / (spec.name + ".csv");
            write_file(path, driftbench::to_csv(driftbench::materialize(spec)));
            std::cout << "wrote " << path.string() << '\n';
            return kExitOk;
        }

        if (cmd_report->parsed()) {
            const auto results = driftbench::results_from_csv(read_file(results_path));
            const std::string table = driftbench::report_from_results(results);
            if (!out_flag.empty() || std::getenv("DRIFTBENCH_OUT")) {
                const std::string dir = resolve_out_dir(out_flag, "out");
                std::filesystem::create_directories(dir);
                write_file(std::filesystem::path(dir) / "report.md", table);
            }
            std::cout << table;
            return kExitOk;
        }

        auto config = driftbench::load_experiment_config(config_path);
        if (jobs > 0) config.jobs = jobs;
        if (seed_offset != 0) {
            for (auto& s : config.seeds) s += seed_offset;
        }
        const std::string dir = resolve_out_dir(out_flag, config.out_dir);
        std::filesystem::create_directories(dir);

        if (cmd_sweep->parsed()) {
            if (config.grid.size() == 1) {
                std::cerr << "warning: grid of size 1, passthrough\n";
            }
            const auto outcome = driftbench::run_sweep(config);
            write_file(std::filesystem::path(dir) / "sweep_report.md", outcome.report);
            write_file(std::filesystem::path(dir) / "best_config.json", outcome.best_config_json);
            std::cout << outcome.report;
            return kExitOk;
        }

        // run
        const auto output = driftbench::execute_runs(config, config.detectors);
        write_file(std::filesystem::path(dir) / "results.csv",
                   driftbench::results_to_csv(output.results));
        write_file(std::filesystem::path(dir) / "detections.jsonl",
                   driftbench::detections_to_jsonl(output.results));
        write_file(std::filesystem::path(dir) / "report.md",
                   driftbench::report_from_results(output.results));
        std::cout << output.results.size() << " runs ok, " << output.failures << " failed\n";
        for (const auto& msg : output.failure_messages) std::cerr << "run failed: " << msg << '\n';
        return output.failures == 0 ? kExitOk : kExitRuntime;
    } catch (const driftbench::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
