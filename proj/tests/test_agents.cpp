#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "roundtable/agents.hpp"

using namespace roundtable;

namespace {

std::vector<ChatMessage> simple_prompt() {
    return {{"system", "You are a solver."}, {"user", "What is 2+2?"}};
}

CallContext ctx_for(const std::string& session, int agent, int round) {
    CallContext ctx;
    ctx.session_id = session;
    ctx.agent_id = agent;
    ctx.round = round;
    ctx.task_id = "t1";
    ctx.gold = Answer::numeric(4);
    ctx.answer_type = AnswerType::number();
    return ctx;
}

// Stub chat-completion server. Returns 429 for the first `limit_hits`
// requests, then a fixed completion.
struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};
    std::atomic<int> rate_limit_first{0};
    std::string last_body;
    std::string last_auth;

    explicit StubServer(int limit_hits = 0) {
        rate_limit_first = limit_hits;
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        int n = ++hits;
                        last_body = req.body;
                        last_auth = req.get_header_value("Authorization");
                        if (n <= rate_limit_first) {
                            res.status = 429;
                            res.set_content("rate limited", "text/plain");
                            return;
                        }
                        nlohmann::json out{
                            {"choices",
                             nlohmann::json::array(
                                 {{{"message", {{"content", "The answer is 4."}}}}})},
                            {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 7}}}};
                        res.set_content(out.dump(), "application/json");
                    });
        server.Post("/boom", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    }
};

AgentSpec http_spec(const std::string& url, int max_retries = 5) {
    AgentSpec spec;
    spec.id = 0;
    spec.persona = "Kitty";
    spec.backend = BackendKind::Http;
    spec.http.url = url;
    spec.http.model = "test-model";
    spec.http.max_retries = max_retries;
    spec.http.timeout_s = 5.0;
    return spec;
}

}  // namespace

TEST_CASE("scripted backend replays entries byte-exactly and deterministically") {
    ScriptedBackend backend;
    backend.add("s1", 0, 1, AgentReply{"...So the answer is 160 minutes.", {10, 20}});

    auto spec = AgentSpec{};
    auto first = backend.generate(spec, simple_prompt(), ctx_for("s1", 0, 1));
    auto second = backend.generate(spec, simple_prompt(), ctx_for("s1", 0, 1));
    CHECK(first.text == "...So the answer is 160 minutes.");
    CHECK(first.text == second.text);
    CHECK(first.usage.input_tokens == 10);
    CHECK(first.usage.output_tokens == 20);

    CHECK(backend.probe(spec).ok);
}

TEST_CASE("scripted backend: missing entry is a hard error") {
    ScriptedBackend backend;
    backend.add("s1", 0, 1, AgentReply{"text", {}});
    try {
        backend.generate(AgentSpec{}, simple_prompt(), ctx_for("s1", 0, 2));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::MissingScriptEntry);
        CHECK(std::string(e.what()).find("no scripted reply") != std::string::npos);
    }
}

TEST_CASE("generate rejects empty prompts") {
    ScriptedBackend backend;
    backend.add("s1", 0, 1, AgentReply{"text", {}});
    CHECK_THROWS_AS(backend.generate(AgentSpec{}, {}, ctx_for("s1", 0, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(backend.generate(AgentSpec{}, {{"system", ""}}, ctx_for("s1", 0, 1)),
                    std::invalid_argument);
}

TEST_CASE("http backend: 429 three times then success, with backoff and usage") {
    StubServer stub(3);
    std::vector<double> delays;
    HttpBackend backend([&](double s) { delays.push_back(s); });

    auto spec = http_spec(stub.url());
    auto reply = backend.generate(spec, simple_prompt(), ctx_for("s1", 0, 1));

    CHECK(reply.text == "The answer is 4.");
    CHECK(reply.usage.input_tokens == 12);
    CHECK(reply.usage.output_tokens == 7);
    CHECK(stub.hits.load() == 4);  // 3 rate-limited + 1 success
    REQUIRE(delays.size() == 3);
    // Exponential with jitter in [0.5, 1.0] of the nominal step.
    CHECK(delays[0] >= 0.5);
    CHECK(delays[0] <= 1.0);
    CHECK(delays[1] >= 1.0);
    CHECK(delays[1] <= 2.0);
    CHECK(delays[2] >= 2.0);
    CHECK(delays[2] <= 4.0);

    // Request carries the chat-completion shape.
    auto body = nlohmann::json::parse(stub.last_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("temperature") == 1.0);
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body.at("messages")[0].at("role") == "system");
    CHECK(body.at("messages")[1].at("role") == "user");
}

TEST_CASE("http backend: retry budget is bounded") {
    StubServer stub(1000);  // never stops rate limiting
    std::vector<double> delays;
    HttpBackend backend([&](double s) { delays.push_back(s); });

    auto spec = http_spec(stub.url(), 2);
    try {
        backend.generate(spec, simple_prompt(), ctx_for("s1", 0, 1));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::RateLimited);
        CHECK(e.status() == 429);
    }
    CHECK(stub.hits.load() == 3);  // max_retries + 1 attempts
    CHECK(delays.size() == 2);
}

TEST_CASE("http backend: non-success status and transport failures are distinguishable") {
    StubServer stub(0);
    HttpBackend backend([](double) {});

    auto wrong_path = http_spec("http://127.0.0.1:" + std::to_string(stub.port) + "/boom");
    try {
        backend.generate(wrong_path, simple_prompt(), ctx_for("s1", 0, 1));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::HttpStatus);
        CHECK(e.status() == 500);
    }

    auto unreachable = http_spec("http://127.0.0.1:1/v1/chat/completions");
    unreachable.http.timeout_s = 1.0;
    try {
        backend.generate(unreachable, simple_prompt(), ctx_for("s1", 0, 1));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Transport);
    }
}

TEST_CASE("http backend sends the bearer credential from the environment") {
    StubServer stub(0);
    setenv("ROUNDTABLE_TEST_KEY", "sk-secret", 1);
    HttpBackend backend([](double) {});
    auto spec = http_spec(stub.url());
    spec.http.credential_env = "ROUNDTABLE_TEST_KEY";
    backend.generate(spec, simple_prompt(), ctx_for("s1", 0, 1));
    CHECK(stub.last_auth == "Bearer sk-secret");
    unsetenv("ROUNDTABLE_TEST_KEY");
}

TEST_CASE("probe: scripted ok, http credential and reachability checks") {
    ScriptedBackend scripted;
    CHECK(scripted.probe(AgentSpec{}).ok);

    HttpBackend backend([](double) {});

    auto spec = http_spec("http://127.0.0.1:1/v1/chat/completions");
    spec.http.credential_env = "ROUNDTABLE_MISSING_KEY";
    unsetenv("ROUNDTABLE_MISSING_KEY");
    auto result = backend.probe(spec);
    CHECK(!result.ok);
    CHECK(result.diagnostic.find("missing credential") != std::string::npos);

    {
        StubServer stub(0);
        auto ok_spec = http_spec(stub.url());
        CHECK(backend.probe(ok_spec).ok);
    }

    auto unreachable = http_spec("http://127.0.0.1:1/v1/chat/completions");
    result = backend.probe(unreachable);
    CHECK(!result.ok);
    CHECK(result.diagnostic.find("unreachable") != std::string::npos);
}

TEST_CASE("synthetic backend: deterministic draws near the target rate") {
    SyntheticParams params;
    params.p = 0.6;
    params.distractors = 4;
    params.seed = 42;

    int gold_hits = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        auto ctx = ctx_for("session-" + std::to_string(i), 0, 1);
        Answer a = SyntheticBackend::draw(params, ctx);
        Answer b = SyntheticBackend::draw(params, ctx);
        CHECK(answers_equal(a, b));  // same context, same draw
        if (answers_equal(a, *ctx.gold)) ++gold_hits;
    }
    CHECK(gold_hits > 540);
    CHECK(gold_hits < 660);

    // Distractors stay within the declared pool.
    for (int i = 0; i < 50; ++i) {
        auto ctx = ctx_for("d-" + std::to_string(i), 1, 2);
        Answer a = SyntheticBackend::draw(params, ctx);
        REQUIRE(a.kind == AnswerKind::Numeric);
        CHECK(a.value >= 4.0);
        CHECK(a.value <= 4.0 + params.distractors);
    }

    SyntheticBackend backend;
    AgentSpec spec;
    spec.backend = BackendKind::Synthetic;
    spec.synthetic = params;
    auto reply = backend.generate(spec, simple_prompt(), ctx_for("s", 0, 1));
    auto extracted = extract_answer(reply.text, AnswerType::number());
    CHECK(extracted.kind == AnswerKind::Numeric);
}

TEST_CASE("usage accounting sums per-reply fields exactly") {
    ScriptedBackend backend;
    TokenUsage expected;
    for (int round = 1; round <= 5; ++round) {
        TokenUsage u{round * 10, round * 3};
        expected += u;
        backend.add("s1", 0, round, AgentReply{"The answer is 1.", u});
    }
    TokenUsage total;
    for (int round = 1; round <= 5; ++round) {
        total += backend.generate(AgentSpec{}, simple_prompt(), ctx_for("s1", 0, round)).usage;
    }
    CHECK(total == expected);
}
