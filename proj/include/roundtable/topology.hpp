#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "roundtable/rational.hpp"

namespace roundtable {

// The four communication paradigms, one per classic network topology:
// Memory = bus (shared logbook), Report = star, Relay = ring, Debate = tree.
enum class ParadigmKind { Memory, Report, Relay, Debate };

std::string to_string(ParadigmKind kind);
ParadigmKind paradigm_kind_from_string(std::string_view name);

// Paradigm parameters. `center` is meaningful for Report only; `order` (a
// permutation of 0..n-1, position -> agent) for Relay only. Debate uses the
// implicit heap layout: agent 0 is the root, children of i are 2i+1, 2i+2.
struct Paradigm {
    ParadigmKind kind = ParadigmKind::Memory;
    int center = 0;
    std::vector<int> order;  // empty means identity

    static Paradigm memory();
    static Paradigm report(int center);
    static Paradigm relay(std::vector<int> order = {});
    static Paradigm debate();
};

struct CommunicationGraph {
    int n = 0;
    Paradigm paradigm;
};

// Sorted ascending, no duplicates. May include the target agent itself: every
// paradigm delivers an agent its own previous-round message.
using ReceiveSet = std::vector<int>;

// Returns every violated constraint; empty means the graph is constructible.
std::vector<std::string> validate(const CommunicationGraph& graph);

// Agents whose round-(round-1) messages feed `agent`'s prompt in `round`.
// Round-independent for round >= 2; round 1 has no incoming messages, so
// round < 2 is an error. Throws std::invalid_argument on bad agent/round.
ReceiveSet receive_set(const CommunicationGraph& graph, int agent, int round);

// Messages delivered to `agent` per round, counted per role. A Debate node
// that is both a child and a parent reads its own previous message in each
// role, so its delivery count exceeds its receive-set size by one. This
// per-role accounting is what makes the closed-form volumes exact.
int delivery_count(const CommunicationGraph& graph, int agent);

// Closed-form per-round message count: Memory n^2, Report 3n-2, Relay 2n,
// Debate 7(n-1)/2. Equals the sum of delivery_count over all agents.
std::int64_t communication_volume(const CommunicationGraph& graph);

// Average number of rounds for one agent's output to reach another:
// Memory 1, Report 2-2/n, Relay n/2, Debate sum(2^(i-1)*i)/(2^(h-1)-1)
// over i=1..h-1 where h is the tree height.
Rational propagation_speed(const CommunicationGraph& graph);

// Debate tree helpers (heap layout).
int debate_height(int n);          // n = 2^h - 1  ->  h
int debate_parent(int node);       // -1 for the root
int debate_sibling(int node);      // -1 for the root
bool debate_is_leaf(int node, int n);
int debate_depth(int node);

}  // namespace roundtable
