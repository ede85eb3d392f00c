#include "roundtable/topology.hpp"

#include <algorithm>
#include <stdexcept>

namespace roundtable {

std::string to_string(ParadigmKind kind) {
    switch (kind) {
        case ParadigmKind::Memory: return "memory";
        case ParadigmKind::Report: return "report";
        case ParadigmKind::Relay: return "relay";
        case ParadigmKind::Debate: return "debate";
    }
    return "memory";
}

ParadigmKind paradigm_kind_from_string(std::string_view name) {
    if (name == "memory") return ParadigmKind::Memory;
    if (name == "report") return ParadigmKind::Report;
    if (name == "relay") return ParadigmKind::Relay;
    if (name == "debate") return ParadigmKind::Debate;
    throw std::invalid_argument("unknown paradigm: " + std::string(name));
}

Paradigm Paradigm::memory() { return Paradigm{ParadigmKind::Memory, 0, {}}; }
Paradigm Paradigm::report(int center) { return Paradigm{ParadigmKind::Report, center, {}}; }
Paradigm Paradigm::relay(std::vector<int> order) {
    return Paradigm{ParadigmKind::Relay, 0, std::move(order)};
}
Paradigm Paradigm::debate() { return Paradigm{ParadigmKind::Debate, 0, {}}; }

int debate_height(int n) {
    int h = 0;
    int size = 0;
    while (size < n) {
        size = size * 2 + 1;
        ++h;
    }
    return h;
}

int debate_parent(int node) { return node == 0 ? -1 : (node - 1) / 2; }

int debate_sibling(int node) {
    if (node == 0) return -1;
    return node % 2 == 1 ? node + 1 : node - 1;
}

bool debate_is_leaf(int node, int n) { return 2 * node + 1 >= n; }

int debate_depth(int node) {
    int depth = 0;
    while (node > 0) {
        node = (node - 1) / 2;
        ++depth;
    }
    return depth;
}

namespace {

bool is_full_tree_size(int n) {
    // n = 2^h - 1 with h >= 2
    int size = 1;
    while (size < n) size = size * 2 + 1;
    return size == n && n >= 3;
}

// Position of each agent in the relay order (identity when unset).
std::vector<int> relay_positions(const CommunicationGraph& graph) {
    std::vector<int> pos(graph.n);
    if (graph.paradigm.order.empty()) {
        for (int i = 0; i < graph.n; ++i) pos[i] = i;
        return pos;
    }
    for (int k = 0; k < graph.n; ++k) pos[graph.paradigm.order[k]] = k;
    return pos;
}

int relay_predecessor(const CommunicationGraph& graph, int agent) {
    const auto& order = graph.paradigm.order;
    if (order.empty()) {
        return (agent - 1 + graph.n) % graph.n;
    }
    auto pos = relay_positions(graph);
    return order[(pos[agent] - 1 + graph.n) % graph.n];
}

}  // namespace

std::vector<std::string> validate(const CommunicationGraph& graph) {
    std::vector<std::string> violations;
    if (graph.n < 2) {
        violations.push_back("agent count must be at least 2");
    }
    switch (graph.paradigm.kind) {
        case ParadigmKind::Memory:
            break;
        case ParadigmKind::Report:
            if (graph.paradigm.center < 0 || graph.paradigm.center >= graph.n) {
                violations.push_back("center out of range");
            }
            break;
        case ParadigmKind::Relay: {
            const auto& order = graph.paradigm.order;
            if (!order.empty()) {
                std::vector<bool> seen(graph.n, false);
                bool ok = static_cast<int>(order.size()) == graph.n;
                for (int a : order) {
                    if (a < 0 || a >= graph.n || seen[a]) {
                        ok = false;
                        break;
                    }
                    seen[a] = true;
                }
                if (!ok) violations.push_back("order must be a permutation of 0..n-1");
            }
            break;
        }
        case ParadigmKind::Debate:
            if (!is_full_tree_size(graph.n)) {
                violations.push_back("n must be 2^h - 1 for integer h >= 2");
            }
            break;
    }
    return violations;
}

ReceiveSet receive_set(const CommunicationGraph& graph, int agent, int round) {
    if (agent < 0 || agent >= graph.n) {
        throw std::invalid_argument("agent index out of range");
    }
    if (round < 2) {
        throw std::invalid_argument("receive sets exist from round 2 on");
    }
    auto violations = validate(graph);
    if (!violations.empty()) {
        throw std::invalid_argument("invalid graph: " + violations.front());
    }

    ReceiveSet sources;
    switch (graph.paradigm.kind) {
        case ParadigmKind::Memory:
            sources.resize(graph.n);
            for (int i = 0; i < graph.n; ++i) sources[i] = i;
            break;
        case ParadigmKind::Report:
            if (agent == graph.paradigm.center) {
                sources.resize(graph.n);
                for (int i = 0; i < graph.n; ++i) sources[i] = i;
            } else {
                sources = {graph.paradigm.center, agent};
            }
            break;
        case ParadigmKind::Relay:
            sources = {relay_predecessor(graph, agent), agent};
            break;
        case ParadigmKind::Debate: {
            sources.push_back(agent);
            if (int sib = debate_sibling(agent); sib >= 0) sources.push_back(sib);
            if (!debate_is_leaf(agent, graph.n)) {
                sources.push_back(2 * agent + 1);
                sources.push_back(2 * agent + 2);
            }
            break;
        }
    }
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    return sources;
}

int delivery_count(const CommunicationGraph& graph, int agent) {
    if (graph.paradigm.kind != ParadigmKind::Debate) {
        return static_cast<int>(receive_set(graph, agent, 2).size());
    }
    // A Debate node reads its own previous message once per role, so a node
    // that is both a child and a parent gets it twice.
    int count = 0;
    if (agent != 0) count += 2;                          // sibling + self as child
    if (!debate_is_leaf(agent, graph.n)) count += 3;     // two children + self as parent
    return count;
}

std::int64_t communication_volume(const CommunicationGraph& graph) {
    auto violations = validate(graph);
    if (!violations.empty()) {
        throw std::invalid_argument("invalid graph: " + violations.front());
    }
    std::int64_t n = graph.n;
    switch (graph.paradigm.kind) {
        case ParadigmKind::Memory: return n * n;
        case ParadigmKind::Report: return 3 * n - 2;
        case ParadigmKind::Relay: return 2 * n;
        case ParadigmKind::Debate: return 7 * (n - 1) / 2;
    }
    return 0;
}

Rational propagation_speed(const CommunicationGraph& graph) {
    auto violations = validate(graph);
    if (!violations.empty()) {
        throw std::invalid_argument("invalid graph: " + violations.front());
    }
    std::int64_t n = graph.n;
    switch (graph.paradigm.kind) {
        case ParadigmKind::Memory:
            return Rational(1, 1);
        case ParadigmKind::Report:
            return Rational(2, 1) - Rational(2, n);
        case ParadigmKind::Relay:
            return Rational(n, 2);
        case ParadigmKind::Debate: {
            int h = debate_height(graph.n);
            std::int64_t numerator = 0;
            std::int64_t pow2 = 1;  // 2^(i-1)
            for (int i = 1; i <= h - 1; ++i) {
                numerator += pow2 * i;
                pow2 *= 2;
            }
            std::int64_t denominator = (std::int64_t{1} << (h - 1)) - 1;
            return Rational(numerator, denominator);
        }
    }
    return Rational(0, 1);
}

}  // namespace roundtable
