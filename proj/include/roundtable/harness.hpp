#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roundtable/deliberation.hpp"

namespace roundtable {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// JSONL loader: one object per line with {id, question, answer, answer_type}
// and an optional {options} count for multi-choice. Malformed lines are
// reported with their line numbers.
std::vector<TaskRecord> load_dataset(const std::filesystem::path& file);

// Per-1K-token rates, kept exact.
struct Pricing {
    Rational input_rate{3, 2000};   // 0.0015
    Rational output_rate{1, 500};   // 0.002
};

struct UsageRecord {
    std::string session_id;
    int agent = 0;
    int round = 0;
    TokenUsage usage;
};

struct CostLedger {
    std::vector<UsageRecord> records;
    TokenUsage totals;

    void add(UsageRecord record);
};

// Input x input_rate/1000 + output x output_rate/1000, exact.
Rational compute_cost(const TokenUsage& usage, const Pricing& pricing);
Rational compute_cost(const CostLedger& ledger, const Pricing& pricing);

struct RunConfig {
    std::filesystem::path dataset;
    Paradigm paradigm;
    TerminationPolicy policy;
    std::vector<AgentSpec> agents;
    std::filesystem::path personas_file;       // empty = built-in defaults
    std::filesystem::path exchange_file;       // empty = built-in defaults
    std::filesystem::path demonstrations_file; // empty = zero-shot
    HistoryMode history_mode = HistoryMode::LatestOnly;
    Tolerance tolerance;
    int sample_cap = 1000;
    int parallelism = 1;
    std::uint64_t seed = 0;
    Pricing pricing;
    bool skip_on_error = false;  // default: failed sessions count wrong
    int repeats = 1;

    std::vector<std::string> violations() const;
};

RunConfig load_run_config(const std::filesystem::path& file);

// 16-hex-digit digest of the canonical config serialization; lands in every
// transcript so runs can be told apart.
std::string config_digest(const RunConfig& config);

struct RunMetrics {
    int tasks = 0;
    int completed = 0;
    int failed = 0;
    double accuracy = 0.0;
    std::map<int, int> round_histogram;           // final_round -> sessions
    double mean_rounds = 0.0;
    std::map<std::string, int> termination_reasons;
    TokenUsage total_usage;
    Rational total_cost{0, 1};
    std::vector<double> answer_change_rate;       // per agent index
    bool deterministic = false;                   // all backends deterministic
    int repeats = 1;
    double accuracy_mean = 0.0;                   // across repeats
    double accuracy_stddev = 0.0;
};

struct BenchmarkResult {
    RunMetrics metrics;
    std::vector<Transcript> transcripts;  // dataset order, repeats innermost
    CostLedger ledger;
};

// Runs up to sample_cap tasks x repeats sessions with at most `parallelism`
// in flight, then folds metrics single-threaded. Deterministic byte-for-byte
// given deterministic backends and a fixed seed.
BenchmarkResult run_benchmark(const RunConfig& config);

// Serialization. Transcripts: one JSON object per line; metrics: one pretty
// JSON document. Both stable across identical runs.
std::string transcript_to_json_line(const Transcript& t, const std::string& digest);
void write_transcripts(const std::filesystem::path& file,
                       std::span<const Transcript> transcripts,
                       const std::string& digest);
std::string metrics_to_json(const RunMetrics& m);
void write_metrics(const std::filesystem::path& file, const RunMetrics& m);

// Recomputes metrics from a persisted transcript file. With a dataset the
// correctness of every final answer is re-derived from gold; otherwise the
// stored flags are trusted.
RunMetrics analyze_transcripts(const std::filesystem::path& transcripts_file,
                               const std::optional<std::filesystem::path>& dataset_file,
                               const Pricing& pricing, bool skip_failed = false);

struct VolumeRow {
    ParadigmKind kind;
    int n = 0;
    std::int64_t volume = 0;
    Rational speed{0, 1};
};

// (paradigm, n, volume, speed) rows over a range of agent counts; (paradigm,
// n) pairs outside a paradigm's valid range are skipped.
std::vector<VolumeRow> volume_report(std::span<const ParadigmKind> paradigms,
                                     int n_from, int n_to);

// Probes every agent backend in the config; first = all ok.
std::pair<bool, std::vector<std::string>> probe_config(const RunConfig& config);

}  // namespace roundtable
