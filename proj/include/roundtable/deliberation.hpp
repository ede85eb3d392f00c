#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roundtable/agents.hpp"
#include "roundtable/answers.hpp"
#include "roundtable/prompts.hpp"
#include "roundtable/rational.hpp"
#include "roundtable/topology.hpp"

namespace roundtable {

struct TaskRecord {
    std::string id;
    std::string question;
    Answer gold;
    AnswerType answer_type;
};

// One agent's output in one round. `prompt_sources` tags the agents whose
// previous-round messages fed the prompt (empty in round 1, includes the
// agent itself from round 2 on).
struct RoundMessage {
    int agent = 0;
    int round = 1;
    std::vector<int> prompt_sources;
    std::string text;
    Answer answer;
    Rational confidence{1, 1};
    TokenUsage usage;
};

enum class TerminationReason { Unanimity, ConsistentExit, RoundCap };

std::string to_string(TerminationReason reason);

struct TerminationRecord {
    TerminationReason reason = TerminationReason::RoundCap;
    int final_round = 0;
    int exiting_agent = -1;  // ConsistentExit only
};

struct SessionFailure {
    int agent = 0;
    int round = 0;
    std::string error;
};

// Ordered log of one deliberation session. `termination` is absent exactly
// when `failure` is present (a backend error aborted the session).
struct Transcript {
    std::string session_id;
    std::string task_id;
    std::string question;
    std::vector<RoundMessage> messages;  // ordered by (round, agent)
    std::optional<TerminationRecord> termination;
    Answer final_answer;
    bool correct = false;
    std::optional<SessionFailure> failure;

    // Most recent message of each agent, indexed by agent; nullptr when the
    // agent never produced one.
    std::vector<const RoundMessage*> last_messages(int n) const;
};

struct TerminationPolicy {
    enum class Kind { ConsistentOutput, MajorityConsensus };
    Kind kind = Kind::MajorityConsensus;
    int max_rounds = 5;
    // MajorityConsensus: unanimity required through `unanimity_rounds`, then
    // a class of ceil(quorum_fraction * n) suffices, cap stop at max_rounds.
    double quorum_fraction = 1.0;
    int unanimity_rounds = 5;
    // ConsistentOutput: by default the first exit ends the whole session;
    // with this flag the rest keep talking until fewer than 3 remain.
    bool continue_after_exit = false;

    static TerminationPolicy majority_consensus();
    static TerminationPolicy consistent_output(int max_rounds = 5);

    std::vector<std::string> violations() const;
};

enum class HistoryMode { LatestOnly, FullHistory };

struct SessionConfig {
    CommunicationGraph graph;
    std::vector<AgentSpec> agents;     // |agents| == graph.n
    TerminationPolicy policy;
    PromptConfig prompts;
    HistoryMode history_mode = HistoryMode::LatestOnly;
    Tolerance tolerance;
};

// Modal-answer frequency over one agent's history divided by the rounds
// elapsed. Unparsed answers never cluster, so garbage reads as low
// confidence. Precondition: history non-empty.
Rational confidence(std::span<const Answer> history, const Tolerance& tol = {});

// True when the agent's answer in `round` repeats its round-1 predecessor
// exactly one round earlier. Unparsed answers never trigger an exit.
// Precondition: round >= 2 and history covers rounds 1..round.
bool check_consistent_exit(std::span<const Answer> history, int round,
                           const Tolerance& tol = {});

struct ConsensusDecision {
    bool stop = false;
    TerminationReason reason = TerminationReason::RoundCap;
};

// Majority-consensus stop rule on the current round's answers (one per
// active agent): unanimity within the unanimity window, quorum afterwards,
// unconditional stop at the round cap.
ConsensusDecision check_consensus(std::span<const Answer> last_answers,
                                  const TerminationPolicy& policy, int round,
                                  const Tolerance& tol = {});

// Final answer once a session stopped: the exiting agent's answer after a
// consistent-output exit, otherwise the majority over the agents' last
// answers, ties broken by highest confidence then lowest agent index.
Answer select_final(const Transcript& transcript, int n,
                    const TerminationPolicy& policy, const Tolerance& tol = {});

// Runs one deliberation session over the communication graph: round 1 is the
// plain chain-of-thought prompt, later rounds exchange previous-round
// messages along the topology with confidences injected. Backend failures
// abort the session with a failure-marked transcript.
Transcript run_session(const TaskRecord& task, const SessionConfig& config,
                       std::span<const std::shared_ptr<Backend>> backends,
                       const std::string& session_id);

}  // namespace roundtable
