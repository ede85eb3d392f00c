#include "roundtable/agents.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace roundtable {

namespace {

// FNV-1a, used wherever a stable 64-bit hash is needed.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void require_prompt(const std::vector<ChatMessage>& messages) {
    bool any_content = false;
    for (const auto& m : messages) {
        if (!m.content.empty()) any_content = true;
    }
    if (messages.empty() || !any_content) {
        throw std::invalid_argument("generate called with an empty prompt");
    }
}

}  // namespace

void ScriptedBackend::add(const std::string& session_id, int agent, int round, AgentReply reply) {
    entries_[{session_id, agent, round}] = std::move(reply);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw BackendError(BackendErrorKind::MissingScriptEntry,
                           "cannot read script file: " + file.string());
    }
    nlohmann::json doc;
    in >> doc;
    auto backend = std::make_shared<ScriptedBackend>();
    for (const auto& e : doc.at("entries")) {
        AgentReply reply;
        reply.text = e.at("text").get<std::string>();
        reply.usage.input_tokens = e.value("input_tokens", 0);
        reply.usage.output_tokens = e.value("output_tokens", 0);
        backend->add(e.at("session").get<std::string>(), e.at("agent").get<int>(),
                     e.at("round").get<int>(), std::move(reply));
    }
    return backend;
}

AgentReply ScriptedBackend::generate(const AgentSpec& spec,
                                     const std::vector<ChatMessage>& messages,
                                     const CallContext& ctx) {
    (void)spec;
    require_prompt(messages);
    auto it = entries_.find({ctx.session_id, ctx.agent_id, ctx.round});
    if (it == entries_.end()) {
        std::ostringstream os;
        os << "no scripted reply for session=" << ctx.session_id << " agent=" << ctx.agent_id
           << " round=" << ctx.round;
        throw BackendError(BackendErrorKind::MissingScriptEntry, os.str());
    }
    return it->second;
}

ProbeResult ScriptedBackend::probe(const AgentSpec&) { return ProbeResult{true, ""}; }

HttpBackend::HttpBackend()
    : HttpBackend([](double seconds) {
          std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
      }) {}

HttpBackend::HttpBackend(Sleeper sleeper)
    : sleeper_(std::move(sleeper)), rng_(std::random_device{}()) {}

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/'
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw BackendError(BackendErrorKind::Transport, "malformed endpoint url: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return ParsedUrl{url, "/"};
    }
    return ParsedUrl{url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

double HttpBackend::backoff_delay(const HttpEndpoint& ep, int attempt) {
    double delay = ep.backoff_base_s * std::pow(2.0, attempt - 1);
    delay = std::min(delay, ep.backoff_cap_s);
    std::lock_guard lock(rng_mutex_);
    std::uniform_real_distribution<double> jitter(0.5, 1.0);
    return delay * jitter(rng_);
}

AgentReply HttpBackend::generate(const AgentSpec& spec,
                                 const std::vector<ChatMessage>& messages,
                                 const CallContext& ctx) {
    (void)ctx;
    require_prompt(messages);
    const HttpEndpoint& ep = spec.http;

    nlohmann::json request;
    request["model"] = ep.model;
    request["temperature"] = spec.temperature;
    auto& msgs = request["messages"] = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    const std::string body = request.dump();

    auto url = split_url(ep.url);
    httplib::Headers headers;
    if (!ep.credential_env.empty()) {
        const char* key = std::getenv(ep.credential_env.c_str());
        if (key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    for (int attempt = 1; attempt <= ep.max_retries + 1; ++attempt) {
        httplib::Client client(url.base);
        client.set_connection_timeout(std::chrono::duration<double>(ep.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(ep.timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(ep.timeout_s));

        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            throw BackendError(BackendErrorKind::Transport,
                               "transport failure: " + httplib::to_string(res.error()));
        }
        if (res->status == 429) {
            if (attempt <= ep.max_retries) {
                sleeper_(backoff_delay(ep, attempt));
                continue;
            }
            throw BackendError(BackendErrorKind::RateLimited,
                               "rate limited after " + std::to_string(attempt) + " attempts", 429);
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError(BackendErrorKind::HttpStatus,
                               "endpoint returned status " + std::to_string(res->status),
                               res->status);
        }

        try {
            auto doc = nlohmann::json::parse(res->body);
            AgentReply reply;
            reply.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            if (doc.contains("usage")) {
                reply.usage.input_tokens = doc["usage"].value("prompt_tokens", 0);
                reply.usage.output_tokens = doc["usage"].value("completion_tokens", 0);
            }
            return reply;
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendErrorKind::HttpStatus,
                               std::string("malformed completion response: ") + e.what(),
                               res->status);
        }
    }
    throw BackendError(BackendErrorKind::RateLimited, "unreachable retry exit");
}

ProbeResult HttpBackend::probe(const AgentSpec& spec) {
    const HttpEndpoint& ep = spec.http;
    if (ep.url.empty()) {
        return ProbeResult{false, "endpoint url not configured"};
    }
    if (!ep.credential_env.empty()) {
        const char* key = std::getenv(ep.credential_env.c_str());
        if (!key || !*key) {
            return ProbeResult{false, "missing credential in $" + ep.credential_env};
        }
    }
    ParsedUrl url;
    try {
        url = split_url(ep.url);
    } catch (const BackendError& e) {
        return ProbeResult{false, e.what()};
    }
    httplib::Client client(url.base);
    client.set_connection_timeout(std::chrono::seconds(5));
    client.set_read_timeout(std::chrono::seconds(5));
    // Any HTTP response at all proves the endpoint is reachable.
    if (auto res = client.Get("/")) {
        return ProbeResult{true, ""};
    }
    return ProbeResult{false, "endpoint unreachable: " + ep.url};
}

Answer SyntheticBackend::draw(const SyntheticParams& params, const CallContext& ctx) {
    if (!ctx.gold) {
        throw std::invalid_argument("synthetic backend needs the task's gold answer");
    }
    std::uint64_t h = fnv1a(ctx.session_id, params.seed ^ 0x9e3779b97f4a7c15ULL);
    h = fnv1a(ctx.task_id, h);
    h = fnv1a(std::to_string(ctx.agent_id) + "#" + std::to_string(ctx.round), h);
    std::mt19937_64 rng(h);

    // Explicit arithmetic instead of std::uniform_* keeps draws identical
    // across standard library implementations.
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < params.p) return *ctx.gold;

    int m = std::max(1, params.distractors);
    int pick = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
    const Answer& gold = *ctx.gold;
    switch (gold.kind) {
        case AnswerKind::Numeric:
            return Answer::numeric(gold.value + pick + 1);
        case AnswerKind::Choice: {
            int span = std::max(2, ctx.answer_type.options);
            int base = gold.letter - 'A';
            int shifted = (base + 1 + pick % (span - 1)) % span;
            return Answer::choice(static_cast<char>('A' + shifted));
        }
        case AnswerKind::Boolean:
            return Answer::boolean(!gold.truth);
        case AnswerKind::Unparsed:
            return Answer::unparsed(gold.raw + "-alt" + std::to_string(pick));
    }
    return gold;
}

AgentReply SyntheticBackend::generate(const AgentSpec& spec,
                                      const std::vector<ChatMessage>& messages,
                                      const CallContext& ctx) {
    require_prompt(messages);
    Answer a = draw(spec.synthetic, ctx);
    AgentReply reply;
    reply.text = "Synthetic reasoning step. The answer is " + to_string(a) + ".";
    reply.usage.input_tokens = 0;
    reply.usage.output_tokens = 0;
    return reply;
}

ProbeResult SyntheticBackend::probe(const AgentSpec& spec) {
    if (spec.synthetic.p < 0.0 || spec.synthetic.p > 1.0) {
        return ProbeResult{false, "synthetic p must lie in [0,1]"};
    }
    return ProbeResult{true, ""};
}

std::shared_ptr<Backend> BackendFactory::make(const AgentSpec& spec) {
    switch (spec.backend) {
        case BackendKind::Scripted: {
            auto it = scripted_cache_.find(spec.script_file);
            if (it != scripted_cache_.end()) return it->second;
            std::shared_ptr<Backend> backend;
            if (spec.script_file.empty()) {
                backend = std::make_shared<ScriptedBackend>();
            } else {
                backend = ScriptedBackend::from_file(spec.script_file);
            }
            scripted_cache_[spec.script_file] = backend;
            return backend;
        }
        case BackendKind::Http:
            if (!http_) http_ = std::make_shared<HttpBackend>();
            return http_;
        case BackendKind::Synthetic:
            if (!synthetic_) synthetic_ = std::make_shared<SyntheticBackend>();
            return synthetic_;
    }
    throw std::invalid_argument("unknown backend kind");
}

ProbeResult probe_backend(Backend& backend, const AgentSpec& spec) {
    return backend.probe(spec);
}

}  // namespace roundtable
