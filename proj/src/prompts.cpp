#include "roundtable/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace roundtable {

namespace {

using SlotMap = std::map<std::string, std::string, std::less<>>;

bool slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

// {name} placeholders, [a-z_] names. A brace that does not open a
// well-formed placeholder is a template error, not literal text.
std::vector<std::string> collect_slots(std::string_view text) {
    std::vector<std::string> slots;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        size_t j = i + 1;
        while (j < text.size() && slot_char(text[j])) ++j;
        if (j >= text.size() || text[j] != '}' || j == i + 1) {
            throw TemplateError("malformed placeholder near: " +
                                std::string(text.substr(i, std::min<size_t>(16, text.size() - i))));
        }
        slots.emplace_back(text.substr(i + 1, j - i - 1));
        i = j;
    }
    return slots;
}

std::string substitute(std::string_view text, const SlotMap& values) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') {
            out += text[i];
            continue;
        }
        size_t j = i + 1;
        while (j < text.size() && slot_char(text[j])) ++j;
        if (j >= text.size() || text[j] != '}' || j == i + 1) {
            throw TemplateError("malformed placeholder in template");
        }
        std::string name(text.substr(i + 1, j - i - 1));
        auto it = values.find(name);
        if (it == values.end()) {
            throw TemplateError("unresolved placeholder {" + name + "}");
        }
        out += it->second;
        i = j;
    }
    return out;
}

void check_section(std::string_view section_name, const std::string& text,
                   const std::set<std::string>& allowed,
                   const std::set<std::string>& required) {
    auto slots = collect_slots(text);
    std::set<std::string> seen(slots.begin(), slots.end());
    for (const auto& slot : seen) {
        if (!allowed.count(slot)) {
            throw TemplateError("unknown placeholder {" + slot + "} in " +
                                std::string(section_name) + " section");
        }
    }
    for (const auto& slot : required) {
        if (!seen.count(slot)) {
            throw TemplateError(std::string(section_name) + " section must contain {" + slot + "}");
        }
    }
}

}  // namespace

ExchangeTemplate ExchangeTemplate::defaults() {
    ExchangeTemplate t;
    t.header =
        "Please consider the example provided and think it step by step.\n"
        "Question: {question}";
    t.self_block =
        "Here is your previous solution:\n"
        "Solution: {self_solution}";
    t.friend_block =
        "Here is a solution process from your friend:\n"
        "Solution: {friend_solution}\n"
        "Your friend's confidence in this solution is: {friend_confidence}";
    t.footer =
        "Based on your friend's solution, carefully re-examine your previous answer. "
        "If your friend's confidence level is below 0.5, it suggests a high probability "
        "that the solution might be incorrect. Remember, solutions with high confidence "
        "can also be wrong. Utilize your talent and critical thinking to provide a new "
        "step-by-step solution process.";
    return t;
}

ExchangeTemplate ExchangeTemplate::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw TemplateError("cannot read template file: " + file.string());
    }

    std::map<std::string, std::vector<std::string>> sections;
    std::string current;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "[header]" || line == "[self]" || line == "[friend]" || line == "[footer]") {
            current = line.substr(1, line.size() - 2);
            sections[current];
        } else if (!current.empty()) {
            sections[current].push_back(line);
        } else if (!line.empty()) {
            throw TemplateError("template content before any [section] marker in " + file.string());
        }
    }

    auto joined = [&](const std::string& name, const std::string& fallback) {
        auto it = sections.find(name);
        if (it == sections.end()) return fallback;
        auto lines = it->second;
        while (!lines.empty() && lines.front().empty()) lines.erase(lines.begin());
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        std::string text;
        for (size_t i = 0; i < lines.size(); ++i) {
            if (i) text += '\n';
            text += lines[i];
        }
        return text;
    };

    auto defaults = ExchangeTemplate::defaults();
    ExchangeTemplate t;
    t.header = joined("header", defaults.header);
    t.self_block = joined("self", defaults.self_block);
    t.friend_block = joined("friend", defaults.friend_block);
    t.footer = joined("footer", defaults.footer);
    t.validate();
    return t;
}

void ExchangeTemplate::validate() const {
    check_section("header", header, {"question"}, {"question"});
    check_section("self", self_block, {"self_solution"}, {"self_solution"});
    check_section("friend", friend_block,
                  {"friend_name", "friend_solution", "friend_confidence"},
                  {"friend_solution", "friend_confidence"});
    check_section("footer", footer, {}, {});
}

RenderedPrompt render_initial(const std::string& question,
                              const PersonaPrompt& persona,
                              std::span<const Demonstration> demonstrations) {
    std::string user;
    for (const auto& demo : demonstrations) {
        user += "Question: " + demo.question + "\n";
        user += "Answer: " + demo.rationale + " The answer is " + demo.answer + ".\n\n";
    }
    user += "Question: " + question + "\nAnswer:";
    return RenderedPrompt{persona.system_text, user};
}

RenderedPrompt render_exchange(const std::string& question,
                               const PersonaPrompt& persona,
                               std::span<const IncomingSolution> incoming,
                               const std::optional<std::string>& own_solution,
                               int round,
                               const ExchangeTemplate& tmpl) {
    if (round < 2) {
        throw std::invalid_argument("exchange prompts exist from round 2 on");
    }
    if (incoming.empty() && !own_solution) {
        throw std::invalid_argument("exchange prompt needs at least one solution block");
    }

    std::vector<std::string> parts;
    parts.push_back(substitute(tmpl.header, SlotMap{{"question", question}}));
    if (own_solution) {
        parts.push_back(substitute(tmpl.self_block, SlotMap{{"self_solution", *own_solution}}));
    }
    for (const auto& in : incoming) {
        parts.push_back(substitute(tmpl.friend_block,
                                   SlotMap{{"friend_name", in.source_name},
                                           {"friend_solution", in.solution},
                                           {"friend_confidence", format_fixed2(in.confidence)}}));
    }
    parts.push_back(tmpl.footer);

    std::string user;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) user += '\n';
        user += parts[i];
    }
    return RenderedPrompt{persona.system_text, user};
}

std::vector<PersonaPrompt> load_personas(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw TemplateError("cannot read personas file: " + file.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw TemplateError("bad personas file " + file.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw TemplateError("personas file must hold a JSON array");
    }
    std::vector<PersonaPrompt> personas;
    for (const auto& item : doc) {
        PersonaPrompt p;
        p.name = item.at("name").get<std::string>();
        p.system_text = item.at("system_text").get<std::string>();
        if (p.name.empty()) throw TemplateError("persona with empty name");
        personas.push_back(std::move(p));
    }
    return personas;
}

std::vector<Demonstration> load_demonstrations(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw TemplateError("cannot read demonstrations file: " + file.string());
    }
    std::vector<Demonstration> demos;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        try {
            auto obj = nlohmann::json::parse(line);
            Demonstration d;
            d.question = obj.at("question").get<std::string>();
            d.rationale = obj.at("rationale").get<std::string>();
            d.answer = obj.at("answer").is_string() ? obj.at("answer").get<std::string>()
                                                    : obj.at("answer").dump();
            demos.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw TemplateError("bad demonstration at line " + std::to_string(line_no) + ": " +
                                e.what());
        }
    }
    return demos;
}

}  // namespace roundtable
