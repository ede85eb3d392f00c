#include "roundtable/answers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>

namespace roundtable {

Answer Answer::numeric(double v) {
    Answer a;
    a.kind = AnswerKind::Numeric;
    a.value = v;
    return a;
}

Answer Answer::choice(char letter) {
    Answer a;
    a.kind = AnswerKind::Choice;
    a.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
    return a;
}

Answer Answer::boolean(bool truth) {
    Answer a;
    a.kind = AnswerKind::Boolean;
    a.truth = truth;
    return a;
}

Answer Answer::unparsed(std::string raw) {
    Answer a;
    a.kind = AnswerKind::Unparsed;
    a.raw = std::move(raw);
    return a;
}

std::string to_string(const Answer& a) {
    switch (a.kind) {
        case AnswerKind::Numeric: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.15g", a.value);
            return buf;
        }
        case AnswerKind::Choice: return std::string(1, a.letter);
        case AnswerKind::Boolean: return a.truth ? "yes" : "no";
        case AnswerKind::Unparsed: return "<unparsed:" + a.raw + ">";
    }
    return "";
}

AnswerType AnswerType::number() { return AnswerType{Kind::Number, 0}; }

AnswerType AnswerType::multi_choice(int options) {
    if (options < 2 || options > 26) {
        throw std::invalid_argument("option count must lie in 2..26");
    }
    return AnswerType{Kind::MultiChoice, options};
}

AnswerType AnswerType::true_false() { return AnswerType{Kind::TrueFalse, 0}; }

std::string to_string(const AnswerType& t) {
    switch (t.kind) {
        case AnswerType::Kind::Number: return "number";
        case AnswerType::Kind::MultiChoice: return "multichoice";
        case AnswerType::Kind::TrueFalse: return "truefalse";
    }
    return "number";
}

AnswerType answer_type_from_string(std::string_view name, int options) {
    if (name == "number") return AnswerType::number();
    if (name == "multichoice" || name == "multi_choice") return AnswerType::multi_choice(options);
    if (name == "truefalse" || name == "true_false") return AnswerType::true_false();
    throw std::invalid_argument("unknown answer type: " + std::string(name));
}

namespace {

constexpr std::string_view kAnswerPhrase = "the answer is";

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

// Index just past the last case-insensitive occurrence of "the answer is".
std::optional<size_t> after_last_phrase(std::string_view text) {
    std::string lower = lowercase(text);
    size_t pos = lower.rfind(kAnswerPhrase);
    if (pos == std::string::npos) return std::nullopt;
    return pos + kAnswerPhrase.size();
}

// Currency symbols worth skipping: ASCII plus the UTF-8 encodings of the
// euro, pound and yen signs.
size_t currency_prefix_len(std::string_view s) {
    if (s.empty()) return 0;
    if (s[0] == '$') return 1;
    static constexpr std::string_view symbols[] = {"\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"};
    for (auto sym : symbols) {
        if (s.substr(0, sym.size()) == sym) return sym.size();
    }
    return 0;
}

// Parses the first number in `tail`, skipping leading filler (spaces, colons,
// opening parens, currency signs). Commas count as thousands separators only
// when followed by exactly three digits. Words between the phrase and the
// number ("about 33") make the tail unparseable by design.
std::optional<double> parse_number(std::string_view tail) {
    size_t i = 0;
    bool negative = false;
    auto skip_filler = [&] {
        while (i < tail.size()) {
            char c = tail[i];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ':' ||
                c == '=' || c == '(' || c == '*' || c == '"' || c == '\'') {
                ++i;
            } else if (size_t len = currency_prefix_len(tail.substr(i)); len > 0) {
                i += len;
            } else {
                break;
            }
        }
    };
    skip_filler();
    if (i < tail.size() && (tail[i] == '-' || tail[i] == '+')) {
        negative = tail[i] == '-';
        ++i;
        skip_filler();
    }
    if (i >= tail.size()) return std::nullopt;
    if (!std::isdigit(static_cast<unsigned char>(tail[i])) && tail[i] != '.') {
        return std::nullopt;
    }

    std::string token;
    bool seen_digit = false;
    bool seen_point = false;
    while (i < tail.size()) {
        char c = tail[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            token += c;
            seen_digit = true;
            ++i;
        } else if (c == '.' && !seen_point) {
            // A decimal point only counts when digits follow; "160." ends at 160.
            if (i + 1 < tail.size() && std::isdigit(static_cast<unsigned char>(tail[i + 1]))) {
                token += c;
                seen_point = true;
                ++i;
            } else {
                break;
            }
        } else if (c == ',' && seen_digit && !seen_point) {
            // Thousands separator: exactly three digits follow, then no digit.
            auto digit_at = [&](size_t k) {
                return k < tail.size() && std::isdigit(static_cast<unsigned char>(tail[k]));
            };
            if (digit_at(i + 1) && digit_at(i + 2) && digit_at(i + 3) && !digit_at(i + 4)) {
                ++i;  // drop the comma
            } else {
                break;
            }
        } else if ((c == 'e' || c == 'E') && seen_digit) {
            // Exponent: e[+-]?digits
            size_t j = i + 1;
            if (j < tail.size() && (tail[j] == '+' || tail[j] == '-')) ++j;
            if (j < tail.size() && std::isdigit(static_cast<unsigned char>(tail[j]))) {
                token += tail.substr(i, j + 1 - i);
                i = j + 1;
                while (i < tail.size() && std::isdigit(static_cast<unsigned char>(tail[i]))) {
                    token += tail[i];
                    ++i;
                }
            }
            break;
        } else {
            break;
        }
    }
    if (!seen_digit) return std::nullopt;
    double v = std::strtod(token.c_str(), nullptr);
    if (!std::isfinite(v)) return std::nullopt;
    return negative ? -v : v;
}

bool is_option_letter(char c, int options) {
    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return upper >= 'A' && upper < 'A' + options;
}

// Finds the last standalone option letter in `text`. A token qualifies when
// stripping surrounding punctuation leaves a single letter in range. A bare
// lowercase "a" never qualifies (it is the article); wrapped forms like
// "(a)" do.
std::optional<char> last_option_letter(std::string_view text, int options) {
    std::optional<char> found;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        std::string_view token = text.substr(start, i - start);

        bool wrapped = token.find_first_of("()[]") != std::string_view::npos;
        size_t b = 0;
        size_t e = token.size();
        auto is_punct = [](char c) {
            return c == '(' || c == ')' || c == '[' || c == ']' || c == '{' || c == '}' ||
                   c == '*' || c == '_' || c == '\'' || c == '"' || c == '.' || c == ',' ||
                   c == ':' || c == ';' || c == '!' || c == '?';
        };
        while (b < e && is_punct(token[b])) ++b;
        while (e > b && is_punct(token[e - 1])) --e;
        if (e - b != 1) continue;
        char c = token[b];
        if (!std::isalpha(static_cast<unsigned char>(c))) continue;
        if (!is_option_letter(c, options)) continue;
        if (c == 'a' && !wrapped) continue;
        found = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return found;
}

// First yes/true/no/false token in `tail`.
std::optional<bool> first_boolean_token(std::string_view tail) {
    std::string lower = lowercase(tail);
    size_t i = 0;
    while (i < lower.size()) {
        while (i < lower.size() && !std::isalpha(static_cast<unsigned char>(lower[i]))) ++i;
        size_t start = i;
        while (i < lower.size() && std::isalpha(static_cast<unsigned char>(lower[i]))) ++i;
        std::string_view word(lower.data() + start, i - start);
        if (word == "yes" || word == "true") return true;
        if (word == "no" || word == "false") return false;
    }
    return std::nullopt;
}

}  // namespace

Answer extract_answer(std::string_view text, const AnswerType& type) {
    auto phrase_end = after_last_phrase(text);
    std::string_view tail = phrase_end ? text.substr(*phrase_end) : std::string_view{};

    switch (type.kind) {
        case AnswerType::Kind::Number: {
            if (phrase_end) {
                if (auto v = parse_number(tail)) return Answer::numeric(*v);
            }
            break;
        }
        case AnswerType::Kind::MultiChoice: {
            if (phrase_end) {
                if (auto c = last_option_letter(tail, type.options)) return Answer::choice(*c);
            }
            if (auto c = last_option_letter(text, type.options)) return Answer::choice(*c);
            break;
        }
        case AnswerType::Kind::TrueFalse: {
            if (phrase_end) {
                if (auto b = first_boolean_token(tail)) return Answer::boolean(*b);
            }
            break;
        }
    }
    return Answer::unparsed(std::string(trim(phrase_end ? tail : text)));
}

namespace {

std::string normalize_raw(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

}  // namespace

bool answers_equal(const Answer& a, const Answer& b, const Tolerance& tol) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case AnswerKind::Numeric: {
            double scale = std::max(std::fabs(a.value), std::fabs(b.value));
            return std::fabs(a.value - b.value) <= std::max(tol.abs_tol, tol.rel_tol * scale);
        }
        case AnswerKind::Choice: return a.letter == b.letter;
        case AnswerKind::Boolean: return a.truth == b.truth;
        case AnswerKind::Unparsed: return normalize_raw(a.raw) == normalize_raw(b.raw);
    }
    return false;
}

bool stable_equal(const Answer& prev, const Answer& cur, const Tolerance& tol) {
    if (prev.kind == AnswerKind::Unparsed || cur.kind == AnswerKind::Unparsed) return false;
    return answers_equal(prev, cur, tol);
}

VoteOutcome majority_vote(std::span<const Answer> answers, const Tolerance& tol) {
    if (answers.empty()) {
        throw std::invalid_argument("majority_vote needs at least one answer");
    }
    VoteOutcome outcome;
    for (int i = 0; i < static_cast<int>(answers.size()); ++i) {
        bool placed = false;
        for (auto& cls : outcome.classes) {
            if (answers_equal(cls.representative, answers[i], tol)) {
                cls.members.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) {
            outcome.classes.push_back(VoteClass{answers[i], {i}});
        }
    }

    size_t best = 0;
    for (size_t c = 1; c < outcome.classes.size(); ++c) {
        if (outcome.classes[c].members.size() > outcome.classes[best].members.size()) {
            best = c;
        }
    }
    outcome.winner = outcome.classes[best].representative;
    outcome.count = static_cast<int>(outcome.classes[best].members.size());
    int at_max = 0;
    for (const auto& cls : outcome.classes) {
        if (static_cast<int>(cls.members.size()) == outcome.count) ++at_max;
    }
    outcome.tied = at_max >= 2;
    return outcome;
}

}  // namespace roundtable
