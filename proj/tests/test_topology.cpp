#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <queue>
#include <vector>

#include "roundtable/topology.hpp"

using namespace roundtable;

namespace {

// Independent adjacency oracle: recv[i][j] == true when agent i reads agent
// j's previous-round message. Built edge-by-edge, never via receive_set.
std::vector<std::vector<bool>> oracle_adjacency(const CommunicationGraph& g) {
    const int n = g.n;
    std::vector<std::vector<bool>> recv(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) recv[i][i] = true;  // own last-round message

    switch (g.paradigm.kind) {
        case ParadigmKind::Memory:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) recv[i][j] = true;
            break;
        case ParadigmKind::Report: {
            int c = g.paradigm.center;
            for (int j = 0; j < n; ++j) {
                if (j == c) continue;
                recv[c][j] = true;  // center hears every non-center
                recv[j][c] = true;  // non-centers hear only the center
            }
            break;
        }
        case ParadigmKind::Relay: {
            std::vector<int> order(n);
            if (g.paradigm.order.empty()) {
                std::iota(order.begin(), order.end(), 0);
            } else {
                order = g.paradigm.order;
            }
            for (int k = 0; k < n; ++k) {
                recv[order[k]][order[(k - 1 + n) % n]] = true;
            }
            break;
        }
        case ParadigmKind::Debate: {
            // Recursive walk over parent/children triples.
            std::vector<int> stack{0};
            while (!stack.empty()) {
                int p = stack.back();
                stack.pop_back();
                int a = 2 * p + 1, b = 2 * p + 2;
                if (a >= n) continue;
                recv[p][a] = recv[p][b] = true;  // upward flow
                recv[a][b] = recv[b][a] = true;  // sibling exchange
                stack.push_back(a);
                stack.push_back(b);
            }
            break;
        }
    }
    return recv;
}

// Delivery-counting oracle. Debate follows the per-subtree accounting: in
// each {parent; childA, childB} room, the parent reads 3 messages and each
// child reads 2 (sibling + its own), so a node in two rooms reads its own
// message twice. Other paradigms count adjacency entries directly.
std::int64_t oracle_volume(const CommunicationGraph& g) {
    if (g.paradigm.kind != ParadigmKind::Debate) {
        auto recv = oracle_adjacency(g);
        std::int64_t total = 0;
        for (const auto& row : recv) total += std::count(row.begin(), row.end(), true);
        return total;
    }
    std::int64_t total = 0;
    for (int p = 0; 2 * p + 1 < g.n; ++p) {
        total += 3 + 2 + 2;
    }
    return total;
}

// BFS hop-count oracle over the send graph (j -> i when i receives from j,
// self-loops dropped). Debate averages distances from every non-root node to
// the root; the others average over all ordered pairs.
Rational oracle_speed(const CommunicationGraph& g) {
    const int n = g.n;
    auto recv = oracle_adjacency(g);
    std::vector<std::vector<int>> out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && recv[i][j]) out[j].push_back(i);

    auto bfs = [&](int src) {
        std::vector<int> dist(n, -1);
        std::queue<int> q;
        dist[src] = 0;
        q.push(src);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : out[u]) {
                if (dist[v] == -1) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        return dist;
    };

    std::int64_t hops = 0, pairs = 0;
    if (g.paradigm.kind == ParadigmKind::Debate) {
        for (int src = 1; src < n; ++src) {
            auto dist = bfs(src);
            REQUIRE(dist[0] >= 0);
            hops += dist[0];
            ++pairs;
        }
    } else {
        for (int src = 0; src < n; ++src) {
            auto dist = bfs(src);
            for (int dst = 0; dst < n; ++dst) {
                if (dst == src) continue;
                REQUIRE(dist[dst] >= 0);
                hops += dist[dst];
                ++pairs;
            }
        }
    }
    return Rational(hops, pairs);
}

CommunicationGraph make(ParadigmKind kind, int n) {
    Paradigm p;
    p.kind = kind;
    return CommunicationGraph{n, p};
}

}  // namespace

TEST_CASE("receive sets for the canonical three-agent graphs") {
    CHECK(receive_set(make(ParadigmKind::Memory, 3), 0, 2) == ReceiveSet{0, 1, 2});

    auto report = CommunicationGraph{3, Paradigm::report(0)};
    CHECK(receive_set(report, 1, 2) == ReceiveSet{0, 1});
    CHECK(receive_set(report, 2, 2) == ReceiveSet{0, 2});
    CHECK(receive_set(report, 0, 2) == ReceiveSet{0, 1, 2});

    auto debate = make(ParadigmKind::Debate, 3);
    CHECK(receive_set(debate, 0, 2) == ReceiveSet{0, 1, 2});
    CHECK(receive_set(debate, 1, 2) == ReceiveSet{1, 2});
    CHECK(receive_set(debate, 2, 2) == ReceiveSet{1, 2});

    auto relay = make(ParadigmKind::Relay, 3);
    CHECK(receive_set(relay, 0, 2) == ReceiveSet{0, 2});
    CHECK(receive_set(relay, 1, 2) == ReceiveSet{0, 1});
}

TEST_CASE("receive sets match the adjacency oracle across the whole grid") {
    for (auto kind : {ParadigmKind::Memory, ParadigmKind::Report, ParadigmKind::Relay}) {
        for (int n = 2; n <= 8; ++n) {
            auto g = make(kind, n);
            auto recv = oracle_adjacency(g);
            for (int agent = 0; agent < n; ++agent) {
                ReceiveSet expected;
                for (int j = 0; j < n; ++j)
                    if (recv[agent][j]) expected.push_back(j);
                CAPTURE(to_string(kind));
                CAPTURE(n);
                CAPTURE(agent);
                CHECK(receive_set(g, agent, 2) == expected);
            }
        }
    }
    for (int n : {3, 7, 15}) {
        auto g = make(ParadigmKind::Debate, n);
        auto recv = oracle_adjacency(g);
        for (int agent = 0; agent < n; ++agent) {
            ReceiveSet expected;
            for (int j = 0; j < n; ++j)
                if (recv[agent][j]) expected.push_back(j);
            CAPTURE(n);
            CAPTURE(agent);
            CHECK(receive_set(g, agent, 2) == expected);
        }
    }
}

TEST_CASE("receive sets respect an explicit relay order") {
    CommunicationGraph g{3, Paradigm::relay({2, 0, 1})};
    CHECK(receive_set(g, 2, 2) == ReceiveSet{1, 2});
    CHECK(receive_set(g, 0, 2) == ReceiveSet{0, 2});
    CHECK(receive_set(g, 1, 2) == ReceiveSet{0, 1});

    auto recv = oracle_adjacency(g);
    for (int agent = 0; agent < 3; ++agent) {
        ReceiveSet expected;
        for (int j = 0; j < 3; ++j)
            if (recv[agent][j]) expected.push_back(j);
        CHECK(receive_set(g, agent, 2) == expected);
    }
}

TEST_CASE("receive sets are round-invariant from round 2 on") {
    for (auto kind : {ParadigmKind::Memory, ParadigmKind::Report, ParadigmKind::Relay}) {
        auto g = make(kind, 5);
        for (int agent = 0; agent < 5; ++agent) {
            auto base = receive_set(g, agent, 2);
            for (int round = 3; round <= 6; ++round) {
                CHECK(receive_set(g, agent, round) == base);
            }
        }
    }
}

TEST_CASE("memory receive sets are symmetric") {
    for (int n = 2; n <= 8; ++n) {
        auto g = make(ParadigmKind::Memory, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                auto ki = receive_set(g, i, 2);
                auto kj = receive_set(g, j, 2);
                bool j_in_ki = std::find(ki.begin(), ki.end(), j) != ki.end();
                bool i_in_kj = std::find(kj.begin(), kj.end(), i) != kj.end();
                CHECK(j_in_ki == i_in_kj);
            }
        }
    }
}

TEST_CASE("debate flow is strictly upward: no parent in a child's receive set") {
    for (int n : {3, 7, 15}) {
        auto g = make(ParadigmKind::Debate, n);
        for (int child = 1; child < n; ++child) {
            int parent = debate_parent(child);
            auto k = receive_set(g, child, 2);
            CHECK(std::find(k.begin(), k.end(), parent) == k.end());
        }
    }
}

TEST_CASE("communication volume: closed forms, oracle counts, frozen examples") {
    // Frozen values from the counting oracle.
    CHECK(communication_volume(make(ParadigmKind::Memory, 3)) == 9);
    CHECK(communication_volume(make(ParadigmKind::Report, 3)) == 7);
    CHECK(communication_volume(make(ParadigmKind::Debate, 3)) == 7);
    CHECK(communication_volume(make(ParadigmKind::Debate, 7)) == 21);
    CHECK(communication_volume(make(ParadigmKind::Relay, 3)) == 6);

    for (auto kind : {ParadigmKind::Memory, ParadigmKind::Report, ParadigmKind::Relay}) {
        for (int n = 2; n <= 8; ++n) {
            auto g = make(kind, n);
            CAPTURE(to_string(kind));
            CAPTURE(n);
            CHECK(communication_volume(g) == oracle_volume(g));
            std::int64_t deliveries = 0;
            for (int agent = 0; agent < n; ++agent) deliveries += delivery_count(g, agent);
            CHECK(deliveries == communication_volume(g));
        }
    }
    for (int n : {3, 7, 15}) {
        auto g = make(ParadigmKind::Debate, n);
        CAPTURE(n);
        CHECK(communication_volume(g) == oracle_volume(g));
        std::int64_t deliveries = 0;
        for (int agent = 0; agent < n; ++agent) deliveries += delivery_count(g, agent);
        CHECK(deliveries == communication_volume(g));
    }
}

TEST_CASE("propagation speed: closed forms equal the BFS oracle") {
    for (int n = 2; n <= 8; ++n) {
        CHECK(propagation_speed(make(ParadigmKind::Memory, n)) == Rational(1, 1));
        CHECK(propagation_speed(make(ParadigmKind::Memory, n)) ==
              oracle_speed(make(ParadigmKind::Memory, n)));

        CHECK(propagation_speed(make(ParadigmKind::Report, n)) ==
              Rational(2, 1) - Rational(2, n));
        CHECK(propagation_speed(make(ParadigmKind::Report, n)) ==
              oracle_speed(make(ParadigmKind::Report, n)));

        CHECK(propagation_speed(make(ParadigmKind::Relay, n)) == Rational(n, 2));
        CHECK(propagation_speed(make(ParadigmKind::Relay, n)) ==
              oracle_speed(make(ParadigmKind::Relay, n)));
    }

    // h = 2, 3, 4
    CHECK(propagation_speed(make(ParadigmKind::Debate, 3)) == Rational(1, 1));
    CHECK(propagation_speed(make(ParadigmKind::Debate, 7)) == Rational(5, 3));
    CHECK(propagation_speed(make(ParadigmKind::Debate, 15)) == Rational(17, 7));
    for (int n : {3, 7, 15}) {
        auto g = make(ParadigmKind::Debate, n);
        CHECK(propagation_speed(g) == oracle_speed(g));
    }
}

TEST_CASE("validate reports every violated constraint") {
    auto violations = validate(make(ParadigmKind::Debate, 4));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("2^h - 1") != std::string::npos);

    violations = validate(CommunicationGraph{3, Paradigm::report(5)});
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("center out of range") != std::string::npos);

    CHECK(validate(CommunicationGraph{3, Paradigm::relay({0, 1, 2})}).empty());
    CHECK(!validate(CommunicationGraph{3, Paradigm::relay({0, 1, 1})}).empty());
    CHECK(!validate(CommunicationGraph{3, Paradigm::relay({0, 1})}).empty());
    CHECK(!validate(make(ParadigmKind::Memory, 1)).empty());
    CHECK(validate(make(ParadigmKind::Debate, 3)).empty());
    CHECK(validate(make(ParadigmKind::Debate, 15)).empty());
}

TEST_CASE("receive_set rejects bad arguments") {
    auto g = make(ParadigmKind::Memory, 3);
    CHECK_THROWS_AS(receive_set(g, 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(receive_set(g, -1, 2), std::invalid_argument);
    CHECK_THROWS_AS(receive_set(g, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(receive_set(make(ParadigmKind::Debate, 4), 0, 2), std::invalid_argument);
}
