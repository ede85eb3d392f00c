#include "roundtable/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace roundtable {

using nlohmann::json;

namespace {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string trim_copy(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

Answer parse_gold(const json& value, const AnswerType& type) {
    switch (type.kind) {
        case AnswerType::Kind::Number: {
            if (value.is_number()) return Answer::numeric(value.get<double>());
            if (value.is_string()) {
                std::string text = trim_copy(value.get<std::string>());
                char* end = nullptr;
                double v = std::strtod(text.c_str(), &end);
                if (end == text.c_str() + text.size() && !text.empty() && std::isfinite(v)) {
                    return Answer::numeric(v);
                }
            }
            throw std::invalid_argument("gold answer is not a number");
        }
        case AnswerType::Kind::MultiChoice: {
            if (value.is_string()) {
                std::string text = trim_copy(value.get<std::string>());
                if (text.size() == 1 && std::isalpha(static_cast<unsigned char>(text[0]))) {
                    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
                    if (upper >= 'A' && upper < 'A' + type.options) return Answer::choice(upper);
                }
            }
            throw std::invalid_argument("gold answer is not an option letter in range");
        }
        case AnswerType::Kind::TrueFalse: {
            if (value.is_boolean()) return Answer::boolean(value.get<bool>());
            if (value.is_string()) {
                std::string text = trim_copy(value.get<std::string>());
                std::transform(text.begin(), text.end(), text.begin(),
                               [](unsigned char c) { return std::tolower(c); });
                if (text == "yes" || text == "true") return Answer::boolean(true);
                if (text == "no" || text == "false") return Answer::boolean(false);
            }
            throw std::invalid_argument("gold answer is not a yes/no value");
        }
    }
    throw std::invalid_argument("unknown answer type");
}

json answer_to_json(const Answer& a) {
    switch (a.kind) {
        case AnswerKind::Numeric: return json{{"type", "numeric"}, {"value", a.value}};
        case AnswerKind::Choice: return json{{"type", "choice"}, {"letter", std::string(1, a.letter)}};
        case AnswerKind::Boolean: return json{{"type", "boolean"}, {"value", a.truth}};
        case AnswerKind::Unparsed: return json{{"type", "unparsed"}, {"raw", a.raw}};
    }
    return json{};
}

Answer answer_from_json(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "numeric") return Answer::numeric(j.at("value").get<double>());
    if (type == "choice") return Answer::choice(j.at("letter").get<std::string>().at(0));
    if (type == "boolean") return Answer::boolean(j.at("value").get<bool>());
    if (type == "unparsed") return Answer::unparsed(j.at("raw").get<std::string>());
    throw std::invalid_argument("unknown answer json type: " + type);
}

Rational rate_from_json(const json& value, const char* field) {
    try {
        if (value.is_string()) return rational_from_decimal(value.get<std::string>());
        if (value.is_number()) return rational_from_decimal(value.dump());
    } catch (const std::invalid_argument&) {
    }
    throw ConfigError(std::string("pricing.") + field + " must be a decimal rate");
}

}  // namespace

std::vector<TaskRecord> load_dataset(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw DatasetError("cannot read dataset: " + file.string());
    }
    std::vector<TaskRecord> tasks;
    std::vector<std::string> errors;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        try {
            auto obj = json::parse(line);
            TaskRecord task;
            task.id = obj.at("id").is_string() ? obj.at("id").get<std::string>()
                                               : obj.at("id").dump();
            task.question = obj.at("question").get<std::string>();
            task.answer_type =
                answer_type_from_string(obj.at("answer_type").get<std::string>(),
                                        obj.value("options", 5));
            task.gold = parse_gold(obj.at("answer"), task.answer_type);
            tasks.push_back(std::move(task));
        } catch (const std::exception& e) {
            errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!errors.empty()) {
        std::string what = "dataset " + file.string() + " has malformed lines:";
        for (const auto& e : errors) what += "\n  " + e;
        throw DatasetError(what);
    }
    return tasks;
}

void CostLedger::add(UsageRecord record) {
    totals += record.usage;
    records.push_back(std::move(record));
}

Rational compute_cost(const TokenUsage& usage, const Pricing& pricing) {
    return Rational(usage.input_tokens, 1) * pricing.input_rate / 1000 +
           Rational(usage.output_tokens, 1) * pricing.output_rate / 1000;
}

Rational compute_cost(const CostLedger& ledger, const Pricing& pricing) {
    return compute_cost(ledger.totals, pricing);
}

std::vector<std::string> RunConfig::violations() const {
    std::vector<std::string> v;
    if (agents.empty()) v.push_back("at least one agent required");
    if (sample_cap < 1) v.push_back("sample_cap must be at least 1");
    if (parallelism < 1) v.push_back("parallelism must be at least 1");
    if (repeats < 1) v.push_back("repeats must be at least 1");
    if (pricing.input_rate < Rational(0, 1) || pricing.output_rate < Rational(0, 1)) {
        v.push_back("pricing rates must be non-negative");
    }
    for (const auto& pv : policy.violations()) v.push_back(pv);
    CommunicationGraph graph{static_cast<int>(agents.size()), paradigm};
    for (const auto& gv : validate(graph)) v.push_back(gv);
    return v;
}

namespace {

Paradigm paradigm_from_json(const json& j) {
    if (j.is_string()) {
        Paradigm p;
        p.kind = paradigm_kind_from_string(j.get<std::string>());
        return p;
    }
    Paradigm p;
    p.kind = paradigm_kind_from_string(j.at("kind").get<std::string>());
    p.center = j.value("center", 0);
    if (j.contains("order")) p.order = j.at("order").get<std::vector<int>>();
    return p;
}

TerminationPolicy policy_from_json(const json& j) {
    TerminationPolicy p = TerminationPolicy::majority_consensus();
    if (j.is_null()) return p;
    std::string kind = j.value("kind", "majority_consensus");
    if (kind == "consistent_output") {
        p = TerminationPolicy::consistent_output(j.value("max_rounds", 5));
        p.continue_after_exit = j.value("continue_after_exit", false);
    } else if (kind == "majority_consensus") {
        p.max_rounds = j.value("max_rounds", 5);
        p.quorum_fraction = j.value("quorum_fraction", 1.0);
        p.unanimity_rounds = j.value("unanimity_rounds", p.max_rounds);
    } else {
        throw ConfigError("unknown policy kind: " + kind);
    }
    return p;
}

AgentSpec agent_from_json(const json& j, int index) {
    AgentSpec spec;
    spec.id = index;
    spec.persona = j.at("persona").get<std::string>();
    if (spec.persona.empty()) throw ConfigError("agent persona must be non-empty");
    spec.temperature = j.value("temperature", 1.0);
    if (spec.temperature < 0) throw ConfigError("temperature must be non-negative");
    std::string backend = j.value("backend", "scripted");
    if (backend == "scripted") {
        spec.backend = BackendKind::Scripted;
        spec.script_file = j.value("script", "");
    } else if (backend == "http") {
        spec.backend = BackendKind::Http;
        spec.http.url = j.at("url").get<std::string>();
        spec.http.model = j.value("model", "");
        spec.http.credential_env = j.value("credential_env", "");
        spec.http.timeout_s = j.value("timeout_s", 120.0);
        spec.http.max_retries = j.value("max_retries", 5);
        spec.http.backoff_base_s = j.value("backoff_base_s", 1.0);
        spec.http.backoff_cap_s = j.value("backoff_cap_s", 30.0);
    } else if (backend == "synthetic") {
        spec.backend = BackendKind::Synthetic;
        spec.synthetic.p = j.value("p", 0.6);
        spec.synthetic.distractors = j.value("distractors", 4);
    } else {
        throw ConfigError("unknown backend kind: " + backend);
    }
    return spec;
}

json paradigm_to_json(const Paradigm& p) {
    json j;
    j["kind"] = to_string(p.kind);
    if (p.kind == ParadigmKind::Report) j["center"] = p.center;
    if (p.kind == ParadigmKind::Relay && !p.order.empty()) j["order"] = p.order;
    return j;
}

json policy_to_json(const TerminationPolicy& p) {
    json j;
    if (p.kind == TerminationPolicy::Kind::ConsistentOutput) {
        j["kind"] = "consistent_output";
        j["max_rounds"] = p.max_rounds;
        j["continue_after_exit"] = p.continue_after_exit;
    } else {
        j["kind"] = "majority_consensus";
        j["max_rounds"] = p.max_rounds;
        j["quorum_fraction"] = p.quorum_fraction;
        j["unanimity_rounds"] = p.unanimity_rounds;
    }
    return j;
}

json agent_to_json(const AgentSpec& spec) {
    json j;
    j["persona"] = spec.persona;
    j["temperature"] = spec.temperature;
    switch (spec.backend) {
        case BackendKind::Scripted:
            j["backend"] = "scripted";
            j["script"] = spec.script_file;
            break;
        case BackendKind::Http:
            j["backend"] = "http";
            j["url"] = spec.http.url;
            j["model"] = spec.http.model;
            j["credential_env"] = spec.http.credential_env;
            j["timeout_s"] = spec.http.timeout_s;
            j["max_retries"] = spec.http.max_retries;
            break;
        case BackendKind::Synthetic:
            j["backend"] = "synthetic";
            j["p"] = spec.synthetic.p;
            j["distractors"] = spec.synthetic.distractors;
            break;
    }
    return j;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot read config file: " + file.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("bad config file " + file.string() + ": " + e.what());
    }

    RunConfig config;
    try {
        config.dataset = doc.value("dataset", "");
        if (doc.contains("paradigm")) config.paradigm = paradigm_from_json(doc.at("paradigm"));
        config.policy = policy_from_json(doc.contains("policy") ? doc.at("policy") : json());
        int index = 0;
        for (const auto& a : doc.value("agents", json::array())) {
            config.agents.push_back(agent_from_json(a, index++));
        }
        if (doc.contains("prompts")) {
            const auto& p = doc.at("prompts");
            config.personas_file = p.value("personas", "");
            config.exchange_file = p.value("exchange", "");
            config.demonstrations_file = p.value("demonstrations", "");
        }
        std::string mode = doc.value("history_mode", "latest_only");
        if (mode == "latest_only") {
            config.history_mode = HistoryMode::LatestOnly;
        } else if (mode == "full_history") {
            config.history_mode = HistoryMode::FullHistory;
        } else {
            throw ConfigError("unknown history_mode: " + mode);
        }
        config.sample_cap = doc.value("sample_cap", 1000);
        config.parallelism = doc.value("parallelism", 1);
        config.seed = doc.value("seed", std::uint64_t{0});
        config.skip_on_error = doc.value("skip_on_error", false);
        config.repeats = doc.value("repeats", 1);
        if (doc.contains("pricing")) {
            const auto& p = doc.at("pricing");
            if (p.contains("input_rate")) {
                config.pricing.input_rate = rate_from_json(p.at("input_rate"), "input_rate");
            }
            if (p.contains("output_rate")) {
                config.pricing.output_rate = rate_from_json(p.at("output_rate"), "output_rate");
            }
        }
        if (doc.contains("tolerance")) {
            config.tolerance.abs_tol = doc.at("tolerance").value("abs", 1e-9);
            config.tolerance.rel_tol = doc.at("tolerance").value("rel", 1e-6);
        }
    } catch (const json::exception& e) {
        throw ConfigError("bad config file " + file.string() + ": " + e.what());
    }
    return config;
}

std::string config_digest(const RunConfig& config) {
    json j;
    j["dataset"] = config.dataset.string();
    j["paradigm"] = paradigm_to_json(config.paradigm);
    j["policy"] = policy_to_json(config.policy);
    auto& agents = j["agents"] = json::array();
    for (const auto& a : config.agents) agents.push_back(agent_to_json(a));
    j["personas"] = config.personas_file.string();
    j["exchange"] = config.exchange_file.string();
    j["demonstrations"] = config.demonstrations_file.string();
    j["history_mode"] = config.history_mode == HistoryMode::FullHistory ? "full_history" : "latest_only";
    j["sample_cap"] = config.sample_cap;
    j["seed"] = config.seed;
    j["skip_on_error"] = config.skip_on_error;
    j["repeats"] = config.repeats;
    j["pricing"] = {{"input_rate", to_string(config.pricing.input_rate)},
                    {"output_rate", to_string(config.pricing.output_rate)}};

    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

namespace {

PromptConfig build_prompt_config(const RunConfig& config) {
    PromptConfig prompts;
    if (!config.personas_file.empty()) {
        prompts.personas = load_personas(config.personas_file);
    } else {
        prompts.personas = {
            PersonaPrompt{"Agent-A", "You are Agent-A, a careful problem solver."},
            PersonaPrompt{"Agent-B", "You are Agent-B, a careful problem solver."},
            PersonaPrompt{"Agent-C", "You are Agent-C, a careful problem solver."},
        };
        while (static_cast<int>(prompts.personas.size()) < static_cast<int>(config.agents.size())) {
            int k = static_cast<int>(prompts.personas.size());
            prompts.personas.push_back(PersonaPrompt{
                "Agent-" + std::to_string(k), "You are a careful problem solver."});
        }
    }
    if (!config.exchange_file.empty()) {
        prompts.exchange = ExchangeTemplate::load(config.exchange_file);
    }
    if (!config.demonstrations_file.empty()) {
        prompts.demonstrations = load_demonstrations(config.demonstrations_file);
    }
    return prompts;
}

}  // namespace

BenchmarkResult run_benchmark(const RunConfig& config) {
    if (auto violations = config.violations(); !violations.empty()) {
        std::string what = "invalid run config:";
        for (const auto& v : violations) what += "\n  " + v;
        throw ConfigError(what);
    }

    auto tasks = load_dataset(config.dataset);
    if (static_cast<int>(tasks.size()) > config.sample_cap) {
        tasks.resize(config.sample_cap);
    }

    SessionConfig session_cfg;
    session_cfg.graph = CommunicationGraph{static_cast<int>(config.agents.size()), config.paradigm};
    session_cfg.agents = config.agents;
    for (auto& spec : session_cfg.agents) {
        if (spec.backend == BackendKind::Synthetic) spec.synthetic.seed = config.seed;
    }
    session_cfg.policy = config.policy;
    session_cfg.prompts = build_prompt_config(config);
    session_cfg.history_mode = config.history_mode;
    session_cfg.tolerance = config.tolerance;

    BackendFactory factory;
    std::vector<std::shared_ptr<Backend>> backends;
    for (const auto& spec : session_cfg.agents) backends.push_back(factory.make(spec));

    bool deterministic = true;
    for (size_t i = 0; i < backends.size(); ++i) {
        deterministic = deterministic && backends[i]->deterministic();
        auto probe = backends[i]->probe(session_cfg.agents[i]);
        if (!probe.ok) {
            throw ConfigError("agent " + std::to_string(i) + " (" +
                              session_cfg.agents[i].persona + ") failed probe: " + probe.diagnostic);
        }
    }

    struct SessionJob {
        int task_index;
        int repeat;
        std::string session_id;
    };
    std::vector<SessionJob> jobs;
    for (int t = 0; t < static_cast<int>(tasks.size()); ++t) {
        for (int r = 0; r < config.repeats; ++r) {
            std::string sid = tasks[t].id;
            if (config.repeats > 1) sid += "#r" + std::to_string(r);
            jobs.push_back(SessionJob{t, r, std::move(sid)});
        }
    }

    std::vector<Transcript> transcripts(jobs.size());
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                transcripts[i] = run_session(tasks[jobs[i].task_index], session_cfg, backends,
                                             jobs[i].session_id);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    int workers = std::min<int>(config.parallelism, static_cast<int>(jobs.size()));
    workers = std::max(workers, 1);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    // Single-owner fold over the finished transcripts.
    RunMetrics metrics;
    metrics.repeats = config.repeats;
    metrics.deterministic = deterministic;
    metrics.tasks = static_cast<int>(tasks.size());

    CostLedger ledger;
    int n = session_cfg.graph.n;
    std::vector<std::int64_t> changes(n, 0), change_opportunities(n, 0);
    std::vector<int> correct_by_repeat(config.repeats, 0);
    std::vector<int> counted_by_repeat(config.repeats, 0);
    int correct_total = 0;
    int denominator = 0;

    for (size_t i = 0; i < jobs.size(); ++i) {
        const auto& t = transcripts[i];
        for (const auto& m : t.messages) {
            ledger.add(UsageRecord{t.session_id, m.agent, m.round, m.usage});
        }

        std::vector<const RoundMessage*> prev(n, nullptr);
        for (const auto& m : t.messages) {
            if (prev[m.agent] != nullptr) {
                ++change_opportunities[m.agent];
                if (!stable_equal(prev[m.agent]->answer, m.answer, config.tolerance)) {
                    ++changes[m.agent];
                }
            }
            prev[m.agent] = &m;
        }

        if (t.failure) {
            ++metrics.failed;
            if (!config.skip_on_error) {
                ++denominator;
                ++counted_by_repeat[jobs[i].repeat];
            }
            continue;
        }
        ++metrics.completed;
        ++denominator;
        ++counted_by_repeat[jobs[i].repeat];
        if (t.correct) {
            ++correct_total;
            ++correct_by_repeat[jobs[i].repeat];
        }
        ++metrics.round_histogram[t.termination->final_round];
        ++metrics.termination_reasons[to_string(t.termination->reason)];
        metrics.mean_rounds += t.termination->final_round;
    }

    metrics.accuracy = denominator > 0 ? static_cast<double>(correct_total) / denominator : 0.0;
    metrics.mean_rounds = metrics.completed > 0 ? metrics.mean_rounds / metrics.completed : 0.0;
    metrics.total_usage = ledger.totals;
    metrics.total_cost = compute_cost(ledger, config.pricing);
    for (int a = 0; a < n; ++a) {
        metrics.answer_change_rate.push_back(
            change_opportunities[a] > 0
                ? static_cast<double>(changes[a]) / static_cast<double>(change_opportunities[a])
                : 0.0);
    }

    std::vector<double> repeat_accuracy;
    for (int r = 0; r < config.repeats; ++r) {
        if (counted_by_repeat[r] > 0) {
            repeat_accuracy.push_back(static_cast<double>(correct_by_repeat[r]) /
                                      counted_by_repeat[r]);
        }
    }
    if (!repeat_accuracy.empty()) {
        double mean = 0;
        for (double a : repeat_accuracy) mean += a;
        mean /= static_cast<double>(repeat_accuracy.size());
        double var = 0;
        for (double a : repeat_accuracy) var += (a - mean) * (a - mean);
        var /= static_cast<double>(repeat_accuracy.size());
        metrics.accuracy_mean = mean;
        metrics.accuracy_stddev = std::sqrt(var);
    }

    return BenchmarkResult{std::move(metrics), std::move(transcripts), std::move(ledger)};
}

std::string transcript_to_json_line(const Transcript& t, const std::string& digest) {
    json j;
    j["session_id"] = t.session_id;
    j["task_id"] = t.task_id;
    j["config_digest"] = digest;
    auto& messages = j["messages"] = json::array();
    for (const auto& m : t.messages) {
        json mj;
        mj["agent"] = m.agent;
        mj["round"] = m.round;
        mj["prompt_sources"] = m.prompt_sources;
        mj["text"] = m.text;
        mj["answer"] = answer_to_json(m.answer);
        mj["confidence"] = to_string(m.confidence);
        mj["usage"] = {{"input_tokens", m.usage.input_tokens},
                       {"output_tokens", m.usage.output_tokens}};
        messages.push_back(std::move(mj));
    }
    if (t.termination) {
        json tj;
        tj["reason"] = to_string(t.termination->reason);
        tj["final_round"] = t.termination->final_round;
        if (t.termination->reason == TerminationReason::ConsistentExit) {
            tj["agent"] = t.termination->exiting_agent;
        }
        j["termination"] = std::move(tj);
    }
    if (t.failure) {
        j["failed"] = {{"agent", t.failure->agent},
                       {"round", t.failure->round},
                       {"error", t.failure->error}};
    }
    j["final_answer"] = answer_to_json(t.final_answer);
    j["correct"] = t.correct;
    return j.dump();
}

void write_transcripts(const std::filesystem::path& file,
                       std::span<const Transcript> transcripts, const std::string& digest) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write transcripts to " + file.string());
    }
    for (const auto& t : transcripts) {
        out << transcript_to_json_line(t, digest) << '\n';
    }
}

std::string metrics_to_json(const RunMetrics& m) {
    json j;
    j["tasks"] = m.tasks;
    j["completed"] = m.completed;
    j["failed"] = m.failed;
    j["accuracy"] = m.accuracy;
    j["mean_rounds"] = m.mean_rounds;
    json hist = json::object();
    for (const auto& [round, count] : m.round_histogram) hist[std::to_string(round)] = count;
    j["round_histogram"] = std::move(hist);
    j["termination_reasons"] = m.termination_reasons;
    j["total_input_tokens"] = m.total_usage.input_tokens;
    j["total_output_tokens"] = m.total_usage.output_tokens;
    j["total_cost"] = to_string(m.total_cost);
    j["total_cost_usd"] = to_double(m.total_cost);
    j["answer_change_rate"] = m.answer_change_rate;
    j["deterministic"] = m.deterministic;
    j["repeats"] = m.repeats;
    j["accuracy_mean"] = m.accuracy_mean;
    j["accuracy_stddev"] = m.accuracy_stddev;
    return j.dump(2);
}

void write_metrics(const std::filesystem::path& file, const RunMetrics& m) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write metrics to " + file.string());
    }
    out << metrics_to_json(m) << '\n';
}

RunMetrics analyze_transcripts(const std::filesystem::path& transcripts_file,
                               const std::optional<std::filesystem::path>& dataset_file,
                               const Pricing& pricing, bool skip_failed) {
    std::ifstream in(transcripts_file);
    if (!in) {
        throw DatasetError("cannot read transcripts: " + transcripts_file.string());
    }

    std::map<std::string, TaskRecord> gold_by_id;
    if (dataset_file) {
        for (auto& task : load_dataset(*dataset_file)) {
            gold_by_id[task.id] = task;
        }
    }

    RunMetrics metrics;
    CostLedger ledger;
    std::vector<std::int64_t> changes, change_opportunities;
    int correct_total = 0;
    int denominator = 0;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DatasetError("transcript line " + std::to_string(line_no) + ": " + e.what());
        }
        ++metrics.tasks;

        std::map<int, Answer> prev_answer;
        for (const auto& mj : j.value("messages", json::array())) {
            int agent = mj.at("agent").get<int>();
            TokenUsage usage{mj.at("usage").at("input_tokens").get<std::int64_t>(),
                             mj.at("usage").at("output_tokens").get<std::int64_t>()};
            ledger.add(UsageRecord{j.value("session_id", ""), agent,
                                   mj.at("round").get<int>(), usage});
            if (static_cast<int>(changes.size()) <= agent) {
                changes.resize(agent + 1, 0);
                change_opportunities.resize(agent + 1, 0);
            }
            Answer ans = answer_from_json(mj.at("answer"));
            if (auto it = prev_answer.find(agent); it != prev_answer.end()) {
                ++change_opportunities[agent];
                if (!stable_equal(it->second, ans)) ++changes[agent];
            }
            prev_answer[agent] = std::move(ans);
        }

        if (j.contains("failed")) {
            ++metrics.failed;
            if (!skip_failed) ++denominator;
            continue;
        }
        ++metrics.completed;
        ++denominator;

        bool correct = j.value("correct", false);
        if (!gold_by_id.empty()) {
            auto it = gold_by_id.find(j.value("task_id", ""));
            if (it != gold_by_id.end()) {
                correct = answers_equal(answer_from_json(j.at("final_answer")), it->second.gold);
            }
        }
        if (correct) ++correct_total;

        const auto& term = j.at("termination");
        int final_round = term.at("final_round").get<int>();
        ++metrics.round_histogram[final_round];
        ++metrics.termination_reasons[term.at("reason").get<std::string>()];
        metrics.mean_rounds += final_round;
    }

    metrics.accuracy = denominator > 0 ? static_cast<double>(correct_total) / denominator : 0.0;
    metrics.mean_rounds = metrics.completed > 0 ? metrics.mean_rounds / metrics.completed : 0.0;
    metrics.total_usage = ledger.totals;
    metrics.total_cost = compute_cost(ledger, pricing);
    for (size_t a = 0; a < changes.size(); ++a) {
        metrics.answer_change_rate.push_back(
            change_opportunities[a] > 0
                ? static_cast<double>(changes[a]) / static_cast<double>(change_opportunities[a])
                : 0.0);
    }
    return metrics;
}

std::vector<VolumeRow> volume_report(std::span<const ParadigmKind> paradigms,
                                     int n_from, int n_to) {
    std::vector<VolumeRow> rows;
    for (auto kind : paradigms) {
        for (int n = n_from; n <= n_to; ++n) {
            Paradigm p;
            p.kind = kind;
            CommunicationGraph graph{n, p};
            if (!validate(graph).empty()) continue;
            rows.push_back(VolumeRow{kind, n, communication_volume(graph),
                                     propagation_speed(graph)});
        }
    }
    return rows;
}

std::pair<bool, std::vector<std::string>> probe_config(const RunConfig& config) {
    BackendFactory factory;
    std::vector<std::string> reports;
    bool all_ok = true;
    for (const auto& spec : config.agents) {
        auto backend = factory.make(spec);
        auto result = backend->probe(spec);
        std::string line = "agent " + std::to_string(spec.id) + " (" + spec.persona + "): ";
        line += result.ok ? "ok" : result.diagnostic;
        reports.push_back(std::move(line));
        all_ok = all_ok && result.ok;
    }
    return {all_ok, std::move(reports)};
}

}  // namespace roundtable
