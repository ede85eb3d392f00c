#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundtable/rational.hpp"

namespace roundtable {

// Raised for unresolvable or unknown {slot} placeholders and malformed
// template files. Always a misconfiguration, never a data-dependent event.
class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PersonaPrompt {
    std::string name;
    std::string system_text;
};

struct Demonstration {
    std::string question;
    std::string rationale;
    std::string answer;
};

// The per-round exchange prompt, split into four templated sections:
//   header: must contain {question}
//   self_block: must contain {self_solution} (the agent's previous solution)
//   friend_block: must contain {friend_solution} and {friend_confidence};
//                 {friend_name} is optional
//   footer: plain text, no required slots
// Rendering order: header, self block, one friend block per incoming message
// in agent-index order, footer, joined by single newlines.
struct ExchangeTemplate {
    std::string header;
    std::string self_block;
    std::string friend_block;
    std::string footer;

    // Built-in default template.
    static ExchangeTemplate defaults();

    // Loads a template file with [header]/[self]/[friend]/[footer] section
    // markers. Missing sections fall back to the defaults.
    static ExchangeTemplate load(const std::filesystem::path& file);

    // Throws TemplateError when a required slot is missing or any section
    // names a slot the renderer cannot fill.
    void validate() const;
};

struct PromptConfig {
    std::vector<Demonstration> demonstrations;  // may be empty (zero-shot)
    std::vector<PersonaPrompt> personas;
    ExchangeTemplate exchange = ExchangeTemplate::defaults();
};

struct RenderedPrompt {
    std::string system;
    std::string user;
};

// One peer message feeding an exchange prompt.
struct IncomingSolution {
    std::string source_name;
    std::string solution;
    Rational confidence;
};

// Round-1 chain-of-thought prompt: persona as system text, demonstrations as
// Question/Answer blocks followed by the target question. Byte-deterministic.
RenderedPrompt render_initial(const std::string& question,
                              const PersonaPrompt& persona,
                              std::span<const Demonstration> demonstrations);

// Round-j (j >= 2) exchange prompt. `incoming` must already be in agent-index
// order; confidences render with two decimals (round-half-even). Requires
// round >= 2 and at least one content block (a friend or the own solution).
RenderedPrompt render_exchange(const std::string& question,
                               const PersonaPrompt& persona,
                               std::span<const IncomingSolution> incoming,
                               const std::optional<std::string>& own_solution,
                               int round,
                               const ExchangeTemplate& tmpl);

// File loaders. Personas: JSON array of {name, system_text}. Demonstrations:
// JSONL of {question, rationale, answer}.
std::vector<PersonaPrompt> load_personas(const std::filesystem::path& file);
std::vector<Demonstration> load_demonstrations(const std::filesystem::path& file);

}  // namespace roundtable
