#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundtable/answers.hpp"

namespace roundtable {

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& other) {
        input_tokens += other.input_tokens;
        output_tokens += other.output_tokens;
        return *this;
    }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct AgentReply {
    std::string text;
    TokenUsage usage;
};

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

// Chat-completion endpoint configuration. The credential is read from the
// environment variable named here; it is never stored in configs or
// transcripts.
struct HttpEndpoint {
    std::string url;                 // e.g. http://host:port/v1/chat/completions
    std::string model;
    std::string credential_env;      // empty = no Authorization header
    double timeout_s = 120.0;
    int max_retries = 5;             // rate-limit retries; total attempts <= max_retries+1
    double backoff_base_s = 1.0;
    double backoff_cap_s = 30.0;
};

// Synthetic answer generator used for Monte Carlo benchmarks: emits the gold
// answer with probability p per round, otherwise one of `distractors`
// equally likely alternatives. Fully determined by the run seed.
struct SyntheticParams {
    double p = 0.6;
    int distractors = 4;
    std::uint64_t seed = 0;
};

enum class BackendKind { Scripted, Http, Synthetic };

struct AgentSpec {
    int id = 0;
    std::string persona;             // persona name, resolved via PromptConfig
    double temperature = 1.0;
    BackendKind backend = BackendKind::Scripted;
    std::string script_file;         // Scripted (optional; tests build in memory)
    HttpEndpoint http;               // Http
    SyntheticParams synthetic;       // Synthetic
};

enum class BackendErrorKind { Transport, HttpStatus, RateLimited, MissingScriptEntry };

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, const std::string& what, int status = 0)
        : std::runtime_error(what), kind_(kind), status_(status) {}
    BackendErrorKind kind() const { return kind_; }
    int status() const { return status_; }

private:
    BackendErrorKind kind_;
    int status_;
};

// Identifies one generate call. Synthetic backends also need the task's gold
// answer to know what "correct" means.
struct CallContext {
    std::string session_id;
    int agent_id = 0;
    int round = 1;
    std::string task_id;
    std::optional<Answer> gold;
    AnswerType answer_type;
};

struct ProbeResult {
    bool ok = true;
    std::string diagnostic;  // empty when ok
};

// Uniform agent interface. Implementations must be safely shareable across
// concurrently running sessions.
class Backend {
public:
    virtual ~Backend() = default;
    virtual AgentReply generate(const AgentSpec& spec,
                                const std::vector<ChatMessage>& messages,
                                const CallContext& ctx) = 0;
    virtual ProbeResult probe(const AgentSpec& spec) = 0;
    virtual bool deterministic() const = 0;
};

// Replay table keyed on (session, agent, round). A missing entry is a test
// misconfiguration and throws BackendError{MissingScriptEntry}.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;

    void add(const std::string& session_id, int agent, int round, AgentReply reply);
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& file);

    AgentReply generate(const AgentSpec& spec,
                        const std::vector<ChatMessage>& messages,
                        const CallContext& ctx) override;
    ProbeResult probe(const AgentSpec& spec) override;
    bool deterministic() const override { return true; }

private:
    std::map<std::tuple<std::string, int, int>, AgentReply> entries_;
};

// Chat-completion client. Request: {model, temperature, messages}; response:
// {choices:[{message:{content}}], usage:{prompt_tokens, completion_tokens}}.
// Only rate-limit (429) responses are retried, with exponential backoff and
// jitter; transport failures and other non-success statuses surface at once.
class HttpBackend : public Backend {
public:
    using Sleeper = std::function<void(double seconds)>;

    HttpBackend();
    explicit HttpBackend(Sleeper sleeper);  // tests inject a recording no-op

    AgentReply generate(const AgentSpec& spec,
                        const std::vector<ChatMessage>& messages,
                        const CallContext& ctx) override;
    ProbeResult probe(const AgentSpec& spec) override;
    bool deterministic() const override { return false; }

private:
    double backoff_delay(const HttpEndpoint& ep, int attempt);

    Sleeper sleeper_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

class SyntheticBackend : public Backend {
public:
    AgentReply generate(const AgentSpec& spec,
                        const std::vector<ChatMessage>& messages,
                        const CallContext& ctx) override;
    ProbeResult probe(const AgentSpec& spec) override;
    bool deterministic() const override { return true; }

    // The draw an agent makes for (session, agent, round), exposed so
    // baselines can reuse the exact same randomness.
    static Answer draw(const SyntheticParams& params, const CallContext& ctx);
};

// Builds the backend an AgentSpec asks for. Scripted specs with the same
// script file share one instance.
class BackendFactory {
public:
    std::shared_ptr<Backend> make(const AgentSpec& spec);

private:
    std::map<std::string, std::shared_ptr<Backend>> scripted_cache_;
    std::shared_ptr<Backend> http_;
    std::shared_ptr<Backend> synthetic_;
};

// Cheap liveness/config check, no full generation spent.
ProbeResult probe_backend(Backend& backend, const AgentSpec& spec);

}  // namespace roundtable
