#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "roundtable/prompts.hpp"

using namespace roundtable;

namespace {

PersonaPrompt kitty{"Kitty", "You are Kitty, a meticulous solver."};

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("render_initial: zero-shot, demonstrations, determinism") {
    std::string question = "What is 2 + 2?";

    auto zero_shot = render_initial(question, kitty, {});
    CHECK(zero_shot.system == kitty.system_text);
    CHECK(zero_shot.user == "Question: What is 2 + 2?\nAnswer:");

    std::vector<Demonstration> demos;
    for (int i = 0; i < 8; ++i) {
        demos.push_back(Demonstration{"q" + std::to_string(i), "r" + std::to_string(i),
                                      std::to_string(i)});
    }
    auto with_demos = render_initial(question, kitty, demos);
    size_t blocks = 0;
    size_t pos = 0;
    while ((pos = with_demos.user.find("Question:", pos)) != std::string::npos) {
        ++blocks;
        pos += 9;
    }
    CHECK(blocks == 9);  // 8 exemplars + the target question
    CHECK(with_demos.user.find("r3 The answer is 3.") != std::string::npos);
    // Target question comes last.
    CHECK(with_demos.user.rfind("Question: What is 2 + 2?\nAnswer:") ==
          with_demos.user.size() - std::string("Question: What is 2 + 2?\nAnswer:").size());

    auto again = render_initial(question, kitty, demos);
    CHECK(again.system == with_demos.system);
    CHECK(again.user == with_demos.user);
}

TEST_CASE("render_exchange: blocks, confidence formatting, ordering") {
    auto tmpl = ExchangeTemplate::defaults();
    std::vector<IncomingSolution> incoming{
        {"Ben", "Ben's solution text", Rational(2, 3)},
    };
    auto prompt = render_exchange("What is 2 + 2?", kitty, incoming,
                                  std::string("my previous take"), 2, tmpl);
    CHECK(prompt.user.find("Question: What is 2 + 2?") != std::string::npos);
    CHECK(prompt.user.find("confidence in this solution is: 0.67") != std::string::npos);
    CHECK(prompt.user.find("Here is your previous solution:\nSolution: my previous take") !=
          std::string::npos);
    CHECK(prompt.user.find("carefully re-examine your previous answer") != std::string::npos);
    CHECK(prompt.user.find("below 0.5") != std::string::npos);

    // Friend blocks appear in the order given (agent-index order upstream).
    std::vector<IncomingSolution> three{
        {"Kitty", "first", Rational(1, 1)},
        {"Ben", "second", Rational(1, 2)},
        {"Peter", "third", Rational(1, 3)},
    };
    auto multi = render_exchange("q", kitty, three, std::nullopt, 3, tmpl);
    auto p1 = multi.user.find("Solution: first");
    auto p2 = multi.user.find("Solution: second");
    auto p3 = multi.user.find("Solution: third");
    REQUIRE(p1 != std::string::npos);
    REQUIRE(p2 != std::string::npos);
    REQUIRE(p3 != std::string::npos);
    CHECK(p1 < p2);
    CHECK(p2 < p3);
    CHECK(multi.user.find("0.50") != std::string::npos);
    CHECK(multi.user.find("0.33") != std::string::npos);
    CHECK(multi.user.find("1.00") != std::string::npos);

    CHECK_THROWS_AS(render_exchange("q", kitty, incoming, std::nullopt, 1, tmpl),
                    std::invalid_argument);
    CHECK_THROWS_AS(render_exchange("q", kitty, {}, std::nullopt, 2, tmpl),
                    std::invalid_argument);
}

TEST_CASE("confidence renders with two decimals, round half to even") {
    CHECK(format_fixed2(Rational(2, 3)) == "0.67");
    CHECK(format_fixed2(Rational(1, 2)) == "0.50");
    CHECK(format_fixed2(Rational(1, 1)) == "1.00");
    CHECK(format_fixed2(Rational(1, 3)) == "0.33");
    CHECK(format_fixed2(Rational(1, 8)) == "0.12");   // 0.125 -> even
    CHECK(format_fixed2(Rational(3, 8)) == "0.38");   // 0.375 -> even
    CHECK(format_fixed2(Rational(5, 8)) == "0.62");
}

TEST_CASE("unresolved or unknown placeholders are hard errors") {
    auto tmpl = ExchangeTemplate::defaults();
    tmpl.header = "Question: {question} and {mystery_slot}";
    CHECK_THROWS_AS(tmpl.validate(), TemplateError);
    CHECK_THROWS_AS(
        render_exchange("q", kitty, std::vector<IncomingSolution>{{"Ben", "s", Rational(1, 1)}},
                        std::nullopt, 2, tmpl),
        TemplateError);

    // Random unknown slot names anywhere in any section must be rejected.
    std::mt19937_64 rng(13);
    const char* sections[] = {"header", "self", "friend", "footer"};
    for (int trial = 0; trial < 50; ++trial) {
        std::string slot = "slot_";
        for (int i = 0; i < 6; ++i) slot += static_cast<char>('a' + rng() % 26);
        auto t = ExchangeTemplate::defaults();
        switch (rng() % 4) {
            case 0: t.header += " {" + slot + "}"; break;
            case 1: t.self_block += " {" + slot + "}"; break;
            case 2: t.friend_block += " {" + slot + "}"; break;
            case 3: t.footer += " {" + slot + "}"; break;
        }
        CAPTURE(sections[trial % 4]);
        CAPTURE(slot);
        CHECK_THROWS_AS(t.validate(), TemplateError);
    }

    auto missing = ExchangeTemplate::defaults();
    missing.friend_block = "Solution: {friend_solution}";  // no confidence slot
    CHECK_THROWS_AS(missing.validate(), TemplateError);

    auto malformed = ExchangeTemplate::defaults();
    malformed.footer = "dangling {brace";
    CHECK_THROWS_AS(malformed.validate(), TemplateError);
}

TEST_CASE("template files load by section and fall back to defaults") {
    auto path = write_temp("roundtable_tmpl_test.txt",
                           "[header]\n"
                           "Q: {question}\n"
                           "[friend]\n"
                           "From {friend_name}:\n"
                           "{friend_solution}\n"
                           "(confidence {friend_confidence})\n");
    auto tmpl = ExchangeTemplate::load(path);
    CHECK(tmpl.header == "Q: {question}");
    CHECK(tmpl.friend_block == "From {friend_name}:\n{friend_solution}\n(confidence {friend_confidence})");
    CHECK(tmpl.self_block == ExchangeTemplate::defaults().self_block);
    CHECK(tmpl.footer == ExchangeTemplate::defaults().footer);

    auto rendered = render_exchange(
        "why?", kitty, std::vector<IncomingSolution>{{"Ben", "sol", Rational(3, 4)}},
        std::nullopt, 2, tmpl);
    CHECK(rendered.user.find("From Ben:") != std::string::npos);
    CHECK(rendered.user.find("(confidence 0.75)") != std::string::npos);

    CHECK_THROWS_AS(ExchangeTemplate::load("/nonexistent/template.txt"), TemplateError);
    std::filesystem::remove(path);
}

TEST_CASE("shipped default templates parse and validate") {
    auto dir = std::filesystem::path(TEMPLATES_DIR);
    auto tmpl = ExchangeTemplate::load(dir / "exchange.txt");
    tmpl.validate();
    CHECK(tmpl.header == ExchangeTemplate::defaults().header);
    CHECK(tmpl.friend_block == ExchangeTemplate::defaults().friend_block);
    CHECK(tmpl.footer == ExchangeTemplate::defaults().footer);

    auto personas = load_personas(dir / "personas.json");
    REQUIRE(personas.size() == 3);
    CHECK(personas[0].name == "Kitty");
    CHECK(personas[1].name == "Ben");
    CHECK(personas[2].name == "Peter");
    for (const auto& p : personas) CHECK(!p.system_text.empty());
}

TEST_CASE("demonstration files load from JSONL") {
    auto path = write_temp("roundtable_demos_test.jsonl",
                           R"({"question": "1+1?", "rationale": "add them", "answer": "2"})"
                           "\n"
                           R"({"question": "2*3?", "rationale": "multiply", "answer": 6})"
                           "\n");
    auto demos = load_demonstrations(path);
    REQUIRE(demos.size() == 2);
    CHECK(demos[0].question == "1+1?");
    CHECK(demos[1].answer == "6");

    auto bad = write_temp("roundtable_demos_bad.jsonl", "{\"question\": \"q\"}\n");
    CHECK_THROWS_AS(load_demonstrations(bad), TemplateError);
    std::filesystem::remove(path);
    std::filesystem::remove(bad);
}
