#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "roundtable/harness.hpp"

namespace fs = std::filesystem;
using namespace roundtable;

namespace {

// "A..B" or a single "N".
std::pair<int, int> parse_range(const std::string& text) {
    auto dots = text.find("..");
    if (dots == std::string::npos) {
        int n = std::stoi(text);
        return {n, n};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
}

int cmd_run(const std::string& config_file, const std::optional<std::string>& paradigm,
            std::optional<int> max_rounds, std::optional<int> parallelism,
            std::optional<int> sample_cap, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
    RunConfig config = load_run_config(config_file);
    if (paradigm) config.paradigm = Paradigm{paradigm_kind_from_string(*paradigm), 0, {}};
    if (max_rounds) config.policy.max_rounds = *max_rounds;
    if (max_rounds && config.policy.kind == TerminationPolicy::Kind::MajorityConsensus) {
        config.policy.unanimity_rounds = std::min(config.policy.unanimity_rounds, *max_rounds);
    }
    if (parallelism) config.parallelism = *parallelism;
    if (sample_cap) config.sample_cap = *sample_cap;
    if (seed) config.seed = *seed;

    auto [ok, reports] = probe_config(config);
    for (const auto& r : reports) std::cout << "probe: " << r << "\n";
    if (!ok) {
        std::cerr << "probe failed; aborting run\n";
        return 1;
    }

    auto result = run_benchmark(config);
    fs::create_directories(out_dir);
    const std::string digest = config_digest(config);
    write_transcripts(fs::path(out_dir) / "transcripts.jsonl", result.transcripts, digest);
    write_metrics(fs::path(out_dir) / "metrics.json", result.metrics);

    std::cout << "sessions: " << result.transcripts.size() << "\n"
              << "accuracy: " << result.metrics.accuracy << "\n"
              << "mean rounds: " << result.metrics.mean_rounds << "\n"
              << "total cost: " << to_string(result.metrics.total_cost) << " ("
              << to_double(result.metrics.total_cost) << ")\n"
              << "wrote " << (fs::path(out_dir) / "transcripts.jsonl").string() << " and "
              << (fs::path(out_dir) / "metrics.json").string() << "\n";
    return 0;
}

int cmd_analyze(const std::string& transcripts, const std::optional<std::string>& dataset,
                const std::string& input_rate, const std::string& output_rate,
                bool skip_failed) {
    Pricing pricing;
    pricing.input_rate = rational_from_decimal(input_rate);
    pricing.output_rate = rational_from_decimal(output_rate);
    std::optional<fs::path> dataset_path;
    if (dataset) dataset_path = *dataset;
    auto metrics = analyze_transcripts(transcripts, dataset_path, pricing, skip_failed);
    std::cout << metrics_to_json(metrics) << "\n";
    return 0;
}

int cmd_volume(const std::string& range, const std::vector<std::string>& paradigm_names) {
    auto [from, to] = parse_range(range);
    std::vector<ParadigmKind> kinds;
    if (paradigm_names.empty()) {
        kinds = {ParadigmKind::Memory, ParadigmKind::Report, ParadigmKind::Relay,
                 ParadigmKind::Debate};
    } else {
        for (const auto& name : paradigm_names) kinds.push_back(paradigm_kind_from_string(name));
    }
    auto rows = volume_report(kinds, from, to);
    std::cout << std::left << std::setw(10) << "paradigm" << std::setw(6) << "n"
              << std::setw(10) << "volume" << std::setw(12) << "speed"
              << "speed~" << "\n";
    for (const auto& row : rows) {
        std::cout << std::left << std::setw(10) << to_string(row.kind) << std::setw(6) << row.n
                  << std::setw(10) << row.volume << std::setw(12) << to_string(row.speed)
                  << to_double(row.speed) << "\n";
    }
    return 0;
}

int cmd_probe(const std::string& config_file) {
    RunConfig config = load_run_config(config_file);
    auto [ok, reports] = probe_config(config);
    for (const auto& r : reports) std::cout << r << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roundtable: multi-agent deliberation engine and benchmark harness"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a benchmark and persist transcripts + metrics");
    std::string run_config;
    std::optional<std::string> run_paradigm;
    std::optional<int> run_max_rounds, run_parallelism, run_sample_cap;
    std::optional<std::uint64_t> run_seed;
    std::string run_out = "out";
    run->add_option("--config", run_config, "run config JSON file")->required();
    run->add_option("--paradigm", run_paradigm, "memory|report|relay|debate");
    run->add_option("--max-rounds", run_max_rounds, "round cap override");
    run->add_option("--parallelism", run_parallelism, "sessions in flight");
    run->add_option("--sample-cap", run_sample_cap, "max tasks to run");
    run->add_option("--seed", run_seed, "synthetic-agent seed");
    run->add_option("--out", run_out, "output directory (default: out)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "recompute metrics from a transcript file");
    std::string an_transcripts;
    std::optional<std::string> an_dataset;
    std::string an_in_rate = "0.0015", an_out_rate = "0.002";
    bool an_skip_failed = false;
    analyze->add_option("--transcripts", an_transcripts, "transcript JSONL file")->required();
    analyze->add_option("--dataset", an_dataset, "re-check correctness against this dataset");
    analyze->add_option("--input-rate", an_in_rate, "input price per 1K tokens");
    analyze->add_option("--output-rate", an_out_rate, "output price per 1K tokens");
    analyze->add_flag("--skip-failed", an_skip_failed, "exclude failed sessions from accuracy");

    // volume
    auto* volume = app.add_subcommand("volume", "communication volume and speed table");
    std::string vol_range;
    std::vector<std::string> vol_paradigms;
    volume->add_option("--n", vol_range, "agent count or range, e.g. 3 or 2..8")->required();
    volume->add_option("--paradigm", vol_paradigms, "restrict to paradigms (default: all)");

    // probe
    auto* probe = app.add_subcommand("probe", "check backend liveness and credentials");
    std::string probe_config_file;
    probe->add_option("--config", probe_config_file, "run config JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(run_config, run_paradigm, run_max_rounds, run_parallelism,
                           run_sample_cap, run_seed, run_out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(an_transcripts, an_dataset, an_in_rate, an_out_rate,
                               an_skip_failed);
        }
        if (volume->parsed()) {
            return cmd_volume(vol_range, vol_paradigms);
        }
        if (probe->parsed()) {
            return cmd_probe(probe_config_file);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
