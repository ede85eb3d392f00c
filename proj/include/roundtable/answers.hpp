#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roundtable {

enum class AnswerKind { Numeric, Choice, Boolean, Unparsed };

// One extracted answer. Only the field matching `kind` is meaningful.
struct Answer {
    AnswerKind kind = AnswerKind::Unparsed;
    double value = 0.0;    // Numeric
    char letter = '\0';    // Choice, always uppercase
    bool truth = false;    // Boolean
    std::string raw;       // Unparsed: trimmed tail the parser gave up on

    static Answer numeric(double v);
    static Answer choice(char letter);
    static Answer boolean(bool truth);
    static Answer unparsed(std::string raw);
};

std::string to_string(const Answer& a);

// Expected answer shape for a task. `options` bounds Choice letters at
// 'A' + options - 1 and is only meaningful for MultiChoice.
struct AnswerType {
    enum class Kind { Number, MultiChoice, TrueFalse };
    Kind kind = Kind::Number;
    int options = 5;

    static AnswerType number();
    static AnswerType multi_choice(int options);
    static AnswerType true_false();
};

std::string to_string(const AnswerType& t);
AnswerType answer_type_from_string(std::string_view name, int options = 5);

// Pulls the answer out of free-form model text. The last occurrence of
// "the answer is" (case-insensitive) anchors the search; numbers are parsed
// after stripping currency symbols, thousands separators, percent signs and
// trailing units. MultiChoice falls back to the last standalone or
// parenthesized option letter anywhere in the text when the phrase yields
// nothing. Anything unextractable comes back as Unparsed with the raw tail.
Answer extract_answer(std::string_view text, const AnswerType& type);

struct Tolerance {
    double abs_tol = 1e-9;
    double rel_tol = 1e-6;
};

// Numeric answers match within max(abs_tol, rel_tol*max(|a|,|b|)); Choice and
// Boolean need exact equality; Unparsed answers match when their raw strings
// agree after whitespace/case normalization. Cross-kind is always false.
bool answers_equal(const Answer& a, const Answer& b, const Tolerance& tol = {});

// Equality for stability checks (consistent-output exits, confidence, answer
// change rates): like answers_equal, except an Unparsed answer never counts
// as stable, not even against an identical raw string.
bool stable_equal(const Answer& prev, const Answer& cur, const Tolerance& tol = {});

struct VoteClass {
    Answer representative;      // first member seen
    std::vector<int> members;   // input indices, ascending
};

struct VoteOutcome {
    Answer winner;              // representative of the first maximal class
    int count = 0;              // size of that class
    bool tied = false;          // >= 2 classes share the maximal size
    std::vector<VoteClass> classes;  // in formation (input) order
};

// Self-consistency vote: partitions answers into equivalence classes under
// answers_equal (greedily, in input order) and returns a maximal class.
// Callers wanting a tie-break beyond "first formed wins" use `classes`.
// Precondition: answers non-empty.
VoteOutcome majority_vote(std::span<const Answer> answers, const Tolerance& tol = {});

}  // namespace roundtable
