#include "roundtable/deliberation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace roundtable {

std::string to_string(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::Unanimity: return "unanimity";
        case TerminationReason::ConsistentExit: return "consistent_exit";
        case TerminationReason::RoundCap: return "round_cap";
    }
    return "round_cap";
}

TerminationPolicy TerminationPolicy::majority_consensus() {
    TerminationPolicy p;
    p.kind = Kind::MajorityConsensus;
    p.max_rounds = 5;
    p.quorum_fraction = 1.0;
    p.unanimity_rounds = 5;
    return p;
}

TerminationPolicy TerminationPolicy::consistent_output(int max_rounds) {
    TerminationPolicy p;
    p.kind = Kind::ConsistentOutput;
    p.max_rounds = max_rounds;
    return p;
}

std::vector<std::string> TerminationPolicy::violations() const {
    std::vector<std::string> v;
    if (kind == Kind::ConsistentOutput) {
        if (max_rounds < 2) v.push_back("consistent-output needs max_rounds >= 2");
    } else {
        if (max_rounds < 1) v.push_back("max_rounds must be at least 1");
        if (!(quorum_fraction > 0.5 && quorum_fraction <= 1.0)) {
            v.push_back("quorum_fraction must lie in (0.5, 1]");
        }
        if (unanimity_rounds < 0) v.push_back("unanimity_rounds must be non-negative");
    }
    return v;
}

std::vector<const RoundMessage*> Transcript::last_messages(int n) const {
    std::vector<const RoundMessage*> last(n, nullptr);
    for (const auto& m : messages) {
        if (m.agent >= 0 && m.agent < n) last[m.agent] = &m;
    }
    return last;
}

Rational confidence(std::span<const Answer> history, const Tolerance& tol) {
    if (history.empty()) {
        throw std::invalid_argument("confidence needs a non-empty history");
    }
    // Modal class size under answer equality, except that Unparsed answers
    // never cluster: garbage must not read as conviction.
    std::vector<std::pair<const Answer*, int>> classes;
    for (const auto& ans : history) {
        bool placed = false;
        if (ans.kind != AnswerKind::Unparsed) {
            for (auto& [rep, count] : classes) {
                if (rep->kind != AnswerKind::Unparsed && answers_equal(*rep, ans, tol)) {
                    ++count;
                    placed = true;
                    break;
                }
            }
        }
        if (!placed) classes.emplace_back(&ans, 1);
    }
    int modal = 0;
    for (const auto& [rep, count] : classes) modal = std::max(modal, count);
    return Rational(modal, static_cast<std::int64_t>(history.size()));
}

bool check_consistent_exit(std::span<const Answer> history, int round, const Tolerance& tol) {
    if (round < 2) {
        throw std::invalid_argument("consistent-output exits need round >= 2");
    }
    if (static_cast<int>(history.size()) < round) {
        throw std::invalid_argument("history does not cover the requested round");
    }
    return stable_equal(history[round - 2], history[round - 1], tol);
}

ConsensusDecision check_consensus(std::span<const Answer> last_answers,
                                  const TerminationPolicy& policy, int round,
                                  const Tolerance& tol) {
    auto vote = majority_vote(last_answers, tol);
    int n = static_cast<int>(last_answers.size());
    if (vote.count == n) {
        return ConsensusDecision{true, TerminationReason::Unanimity};
    }
    if (round > policy.unanimity_rounds) {
        int threshold = static_cast<int>(std::ceil(policy.quorum_fraction * n - 1e-9));
        if (vote.count >= threshold) {
            return ConsensusDecision{true, TerminationReason::Unanimity};
        }
    }
    if (round >= policy.max_rounds) {
        return ConsensusDecision{true, TerminationReason::RoundCap};
    }
    return ConsensusDecision{false, TerminationReason::RoundCap};
}

Answer select_final(const Transcript& transcript, int n, const TerminationPolicy& policy,
                    const Tolerance& tol) {
    (void)policy;
    if (!transcript.termination) {
        throw std::invalid_argument("select_final needs a stopped session");
    }
    auto last = transcript.last_messages(n);

    if (transcript.termination->reason == TerminationReason::ConsistentExit) {
        int agent = transcript.termination->exiting_agent;
        if (agent < 0 || agent >= n || last[agent] == nullptr) {
            throw std::invalid_argument("consistent-exit record names no message");
        }
        return last[agent]->answer;
    }

    std::vector<Answer> answers;
    answers.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (last[i] == nullptr) {
            throw std::invalid_argument("agent without any message in a stopped session");
        }
        answers.push_back(last[i]->answer);
    }
    auto vote = majority_vote(answers, tol);
    if (!vote.tied) {
        return vote.winner;
    }

    // Tie: among agents whose last answer sits in a maximal class, the one
    // with the highest confidence wins; lowest agent index settles the rest.
    std::vector<bool> in_tied_class(n, false);
    for (const auto& cls : vote.classes) {
        if (static_cast<int>(cls.members.size()) == vote.count) {
            for (int member : cls.members) in_tied_class[member] = true;
        }
    }
    int best = -1;
    for (int i = 0; i < n; ++i) {
        if (!in_tied_class[i]) continue;
        if (best == -1 || last[i]->confidence > last[best]->confidence) {
            best = i;
        }
    }
    return last[best]->answer;
}

namespace {

const PersonaPrompt& resolve_persona(const PromptConfig& prompts, const std::string& name) {
    for (const auto& p : prompts.personas) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument("no persona named '" + name + "' in prompt config");
}

// Among this round's exiting agents, the one with the highest confidence;
// lowest index settles residual ties.
int choose_exiting_agent(const std::vector<int>& exits,
                         const std::vector<Rational>& confidences) {
    int best = exits.front();
    for (int agent : exits) {
        if (confidences[agent] > confidences[best]) best = agent;
    }
    return best;
}

}  // namespace

Transcript run_session(const TaskRecord& task, const SessionConfig& config,
                       std::span<const std::shared_ptr<Backend>> backends,
                       const std::string& session_id) {
    const int n = config.graph.n;
    if (auto violations = validate(config.graph); !violations.empty()) {
        throw std::invalid_argument("invalid communication graph: " + violations.front());
    }
    if (static_cast<int>(config.agents.size()) != n) {
        throw std::invalid_argument("agent count must match the communication graph");
    }
    if (static_cast<int>(backends.size()) != n) {
        throw std::invalid_argument("one backend per agent required");
    }
    if (static_cast<int>(config.prompts.personas.size()) < n) {
        throw std::invalid_argument("prompt config needs at least n personas");
    }
    if (auto violations = config.policy.violations(); !violations.empty()) {
        throw std::invalid_argument("invalid termination policy: " + violations.front());
    }
    config.prompts.exchange.validate();

    Transcript t;
    t.session_id = session_id;
    t.task_id = task.id;
    t.question = task.question;

    std::vector<std::vector<Answer>> histories(n);
    std::vector<std::string> last_text(n);
    std::vector<Rational> last_confidence(n, Rational(1, 1));
    std::vector<bool> active(n, true);
    // FullHistory keeps each agent's past (user, assistant) turns.
    std::vector<std::vector<ChatMessage>> past_turns(n);

    const bool consensus_policy = config.policy.kind == TerminationPolicy::Kind::MajorityConsensus;

    auto finish = [&](TerminationReason reason, int round, int exiting_agent) {
        t.termination = TerminationRecord{reason, round, exiting_agent};
        t.final_answer = select_final(t, n, config.policy, config.tolerance);
        t.correct = answers_equal(t.final_answer, task.gold, config.tolerance);
    };

    for (int round = 1; round <= config.policy.max_rounds; ++round) {
        // Round barrier: prompts in this round see only round-(round-1)
        // messages, no matter in which order the agents run.
        const std::vector<std::string> prev_text = last_text;
        const std::vector<Rational> prev_confidence = last_confidence;

        for (int agent = 0; agent < n; ++agent) {
            if (!active[agent]) continue;
            const auto& spec = config.agents[agent];
            const auto& persona = resolve_persona(config.prompts, spec.persona);

            RenderedPrompt prompt;
            std::vector<int> sources;
            if (round == 1) {
                prompt = render_initial(task.question, persona, config.prompts.demonstrations);
            } else {
                for (int s : receive_set(config.graph, agent, round)) {
                    if (active[s]) sources.push_back(s);
                }
                std::vector<IncomingSolution> incoming;
                for (int s : sources) {
                    if (s == agent) continue;
                    incoming.push_back(IncomingSolution{config.agents[s].persona, prev_text[s],
                                                        prev_confidence[s]});
                }
                prompt = render_exchange(task.question, persona, incoming, prev_text[agent],
                                         round, config.prompts.exchange);
            }

            std::vector<ChatMessage> messages;
            messages.push_back({"system", prompt.system});
            if (config.history_mode == HistoryMode::FullHistory) {
                for (const auto& turn : past_turns[agent]) messages.push_back(turn);
            }
            messages.push_back({"user", prompt.user});

            CallContext ctx;
            ctx.session_id = session_id;
            ctx.agent_id = agent;
            ctx.round = round;
            ctx.task_id = task.id;
            ctx.gold = task.gold;
            ctx.answer_type = task.answer_type;

            AgentReply reply;
            try {
                reply = backends[agent]->generate(spec, messages, ctx);
            } catch (const BackendError& e) {
                t.failure = SessionFailure{agent, round, e.what()};
                t.final_answer = Answer::unparsed("");
                t.correct = false;
                return t;
            }

            histories[agent].push_back(extract_answer(reply.text, task.answer_type));
            Rational conf = confidence(histories[agent], config.tolerance);

            RoundMessage msg;
            msg.agent = agent;
            msg.round = round;
            msg.prompt_sources = sources;
            msg.text = reply.text;
            msg.answer = histories[agent].back();
            msg.confidence = conf;
            msg.usage = reply.usage;
            t.messages.push_back(std::move(msg));

            last_text[agent] = reply.text;
            last_confidence[agent] = conf;
            if (config.history_mode == HistoryMode::FullHistory) {
                past_turns[agent].push_back({"user", prompt.user});
                past_turns[agent].push_back({"assistant", reply.text});
            }
        }

        if (consensus_policy) {
            std::vector<Answer> last_answers;
            for (int i = 0; i < n; ++i) last_answers.push_back(histories[i].back());
            auto decision = check_consensus(last_answers, config.policy, round, config.tolerance);
            if (decision.stop) {
                finish(decision.reason, round, -1);
                return t;
            }
        } else {
            if (round >= 2) {
                std::vector<int> exits;
                for (int i = 0; i < n; ++i) {
                    if (active[i] && check_consistent_exit(histories[i], round, config.tolerance)) {
                        exits.push_back(i);
                    }
                }
                if (!exits.empty()) {
                    int chosen = choose_exiting_agent(exits, last_confidence);
                    if (!config.policy.continue_after_exit) {
                        finish(TerminationReason::ConsistentExit, round, chosen);
                        return t;
                    }
                    for (int e : exits) active[e] = false;
                    if (std::count(active.begin(), active.end(), true) < 3) {
                        finish(TerminationReason::ConsistentExit, round, chosen);
                        return t;
                    }
                }
            }
            if (round == config.policy.max_rounds) {
                finish(TerminationReason::RoundCap, round, -1);
                return t;
            }
        }
    }

    // MajorityConsensus stops unconditionally at the cap, so this is only
    // reachable with a malformed policy; treat it as a cap stop.
    finish(TerminationReason::RoundCap, config.policy.max_rounds, -1);
    return t;
}

}  // namespace roundtable
