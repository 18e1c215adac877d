#include "doctest.h"

#include <variant>

#include "regbip/factor.hpp"
#include "regbip/generators.hpp"

#include "oracles.hpp"

using namespace regbip;

namespace {

BipartiteGraph complete_bipartite(int a, int b) {
    Bipartition parts;
    for (int i = 0; i < a; ++i) parts.left.push_back(i);
    for (int i = 0; i < b; ++i) parts.right.push_back(a + i);
    std::vector<Edge> edges;
    for (int u = 0; u < a; ++u)
        for (int v = 0; v < b; ++v) edges.push_back(make_edge(u, a + v));
    return {Graph(a + b, std::move(edges)), parts};
}

DegreeSpec constant_demand(const BipartiteGraph& h, int value) {
    DegreeSpec f;
    f.targets.assign(static_cast<std::size_t>(h.graph.n()), 0);
    for (int v : h.parts.left) f.targets[static_cast<std::size_t>(v)] = value;
    for (int v : h.parts.right) f.targets[static_cast<std::size_t>(v)] = value;
    return f;
}

void check_factor_degrees(const Graph& factor, const BipartiteGraph& h, const DegreeSpec& f) {
    for (int v : h.parts.left) CHECK(factor.degree(v) == f.targets[static_cast<std::size_t>(v)]);
    for (int v : h.parts.right) CHECK(factor.degree(v) == f.targets[static_cast<std::size_t>(v)]);
    for (const Edge& e : factor.edges()) CHECK(h.graph.has_edge(e.first, e.second));
}

}  // namespace

TEST_CASE("f_factor on K33 with unit demand is a perfect matching") {
    auto h = complete_bipartite(3, 3);
    auto f = constant_demand(h, 1);
    auto result = f_factor(h, f);
    REQUIRE(std::holds_alternative<Graph>(result));
    check_factor_degrees(std::get<Graph>(result), h, f);
    CHECK(std::get<Graph>(result).edge_count() == 3);
}

TEST_CASE("f_factor on C4 with demand 2 returns the whole cycle") {
    Bipartition parts{{0, 2}, {1, 3}};
    Graph c4(4, {make_edge(0, 1), make_edge(1, 2), make_edge(2, 3), make_edge(0, 3)});
    BipartiteGraph h{c4, parts};
    auto f = constant_demand(h, 2);
    auto result = f_factor(h, f);
    REQUIRE(std::holds_alternative<Graph>(result));
    CHECK(std::get<Graph>(result).edges() == c4.edges());
}

TEST_CASE("f_factor certificate on the single missing edge") {
    // X = {0 (x1), 1 (x2)}, Y = {2 (y1), 3 (y2)}, no edge x2-y2.
    BipartiteGraph h{Graph(4, {make_edge(0, 2), make_edge(0, 3), make_edge(1, 2)}), {{0, 1}, {2, 3}}};
    DegreeSpec f;
    f.targets = {0, 1, 0, 1};
    auto result = f_factor(h, f);
    REQUIRE(std::holds_alternative<OreCertificate>(result));
    const auto& cert = std::get<OreCertificate>(result);
    CHECK(cert.s == std::vector<int>{1});
    CHECK(cert.t_set == std::vector<int>{3});
    CHECK(cert.lhs == 0);
    CHECK(cert.rhs == 1);
}

TEST_CASE("f_factor rejects unbalanced demand sums") {
    auto h = complete_bipartite(2, 2);
    DegreeSpec f;
    f.targets = {1, 1, 1, 0};
    CHECK_THROWS_AS(f_factor(h, f), std::invalid_argument);
}

TEST_CASE("f_factor demand above degree yields a valid certificate") {
    auto h = complete_bipartite(2, 2);
    DegreeSpec f;
    f.targets = {3, 1, 2, 2};
    auto result = f_factor(h, f);
    REQUIRE(std::holds_alternative<OreCertificate>(result));
    const auto& cert = std::get<OreCertificate>(result);
    CHECK(cert.lhs < cert.rhs);
}

TEST_CASE("f_factor agrees with brute force on exhaustive tiny instances") {
    // All bipartite graphs with sides <= 2 and all f with values <= 2.
    for (int a = 1; a <= 2; ++a) {
        for (int b = 1; b <= 2; ++b) {
            const int cells = a * b;
            for (int mask = 0; mask < (1 << cells); ++mask) {
                Bipartition parts;
                for (int i = 0; i < a; ++i) parts.left.push_back(i);
                for (int i = 0; i < b; ++i) parts.right.push_back(a + i);
                std::vector<Edge> edges;
                for (int u = 0; u < a; ++u)
                    for (int v = 0; v < b; ++v)
                        if (mask & (1 << (u * b + v))) edges.push_back(make_edge(u, a + v));
                BipartiteGraph h{Graph(a + b, std::move(edges)), parts};
                const int total = a + b;
                std::vector<int> f_values(static_cast<std::size_t>(total), 0);
                while (true) {
                    DegreeSpec f;
                    f.targets = f_values;
                    if (f.sum_over(h.parts.left) == f.sum_over(h.parts.right)) {
                        auto result = f_factor(h, f);
                        bool exists = testing::f_factor_exists_bruteforce(h, f);
                        if (std::holds_alternative<Graph>(result)) {
                            CHECK(exists);
                            check_factor_degrees(std::get<Graph>(result), h, f);
                        } else {
                            CHECK_FALSE(exists);
                            const auto& cert = std::get<OreCertificate>(result);
                            long long recount = crossing_pair_count(h.graph, cert.s, cert.t_set);
                            CHECK(recount == cert.lhs);
                            CHECK(cert.lhs < cert.rhs);
                        }
                    }
                    int pos = 0;
                    while (pos < total && f_values[static_cast<std::size_t>(pos)] == 2) {
                        f_values[static_cast<std::size_t>(pos)] = 0;
                        ++pos;
                    }
                    if (pos == total) break;
                    ++f_values[static_cast<std::size_t>(pos)];
                }
            }
        }
    }
}

TEST_CASE("f_factor agrees with brute force on random instances") {
    Rng rng(41);
    for (int trial = 0; trial < 600; ++trial) {
        int a = 1 + static_cast<int>(rng.below(5));
        int b = 1 + static_cast<int>(rng.below(5));
        auto h = testing::random_bipartite(a, b, 0.3 + 0.5 * rng.unit_real(), rng);
        DegreeSpec f;
        f.targets.assign(static_cast<std::size_t>(h.graph.n()), 0);
        for (int v = 0; v < h.graph.n(); ++v) f.targets[static_cast<std::size_t>(v)] = static_cast<int>(rng.below(4));
        if (f.sum_over(h.parts.left) != f.sum_over(h.parts.right)) continue;
        auto result = f_factor(h, f);
        bool exists = testing::f_factor_exists_bruteforce(h, f);
        if (std::holds_alternative<Graph>(result)) {
            CHECK(exists);
            check_factor_degrees(std::get<Graph>(result), h, f);
        } else {
            CHECK_FALSE(exists);
            const auto& cert = std::get<OreCertificate>(result);
            CHECK(crossing_pair_count(h.graph, cert.s, cert.t_set) == cert.lhs);
            CHECK(cert.lhs < cert.rhs);
        }
    }
}

TEST_CASE("probe on complete bipartite host always succeeds") {
    auto h = complete_bipartite(6, 6);
    Rng rng(5);
    auto report = probe_robust_matchability(h, 6.0, 0.0, 0.4, 0.0, 50, rng);
    CHECK(report.trials == 50);
    CHECK(report.successes == 50);
    CHECK_FALSE(report.first_failure.has_value());
}

TEST_CASE("probe on an edgeless host fails every non-vacuous trial") {
    Bipartition parts{{0, 1, 2}, {3, 4, 5}};
    BipartiteGraph h{Graph(6), parts};
    Rng rng(6);
    auto report = probe_robust_matchability(h, 4.0, 0.0, 1.0, 1.0 / 30.0, 40, rng);
    CHECK(report.successes == report.vacuous);
    REQUIRE(report.first_failure.has_value());
    CHECK(report.first_failure->lhs < report.first_failure->rhs);
}

TEST_CASE("regularize_pair tops empty pieces up to a C-regular factor") {
    auto gxy = complete_bipartite(4, 4);
    BipartiteGraph hx{Graph(8), {{0, 1}, {2, 3}}};
    BipartiteGraph hy{Graph(8), {{4, 5}, {6, 7}}};
    RegularizationParams params;
    params.rho = 0.5;
    params.alpha = 0.5;
    params.gamma = 0.1;
    params.K = 1;
    params.d = 8.0;
    params.C = 2;
    params.goodness_threshold = 2.0;
    params.spread_cap = 0.0;
    params.used_degree_cap = 4.0;

    Graph used(8);
    auto outcome = regularize_pair(gxy, hx, hy, used, params);
    CHECK(*outcome.merged.degree == 2);
    Graph merged(8, outcome.merged.edges);
    for (int v = 0; v < 8; ++v) CHECK(merged.degree(v) == 2);
    // Merged bipartition is {X' u Y'', X'' u Y'}.
    CHECK(outcome.merged.parts.left == std::vector<int>{0, 1, 6, 7});
    CHECK(outcome.merged.parts.right == std::vector<int>{2, 3, 4, 5});
}

TEST_CASE("regularize_pair with already regular pieces of equal degree") {
    auto gxy = complete_bipartite(4, 4);
    // Perfect matchings inside each side's split: 1-regular pieces.
    BipartiteGraph hx{Graph(8, {make_edge(0, 2), make_edge(1, 3)}), {{0, 1}, {2, 3}}};
    BipartiteGraph hy{Graph(8, {make_edge(4, 6), make_edge(5, 7)}), {{4, 5}, {6, 7}}};
    RegularizationParams params;
    params.rho = 0.5;
    params.alpha = 0.5;
    params.gamma = 0.1;
    params.K = 1;
    params.d = 8.0;
    params.C = 2;
    params.goodness_threshold = 2.0;
    params.spread_cap = 0.0;
    params.used_degree_cap = 8.0;

    Graph used(8);
    auto outcome = regularize_pair(gxy, hx, hy, used, params);
    CHECK(*outcome.merged.degree == 3);  // C + max degree
    Graph merged(8, outcome.merged.edges);
    for (int v = 0; v < 8; ++v) CHECK(merged.degree(v) == 3);
}

TEST_CASE("regularize_pair rejects mismatched edge counts") {
    auto gxy = complete_bipartite(4, 4);
    BipartiteGraph hx{Graph(8, {make_edge(0, 2)}), {{0, 1}, {2, 3}}};
    BipartiteGraph hy{Graph(8), {{4, 5}, {6, 7}}};
    RegularizationParams params;
    params.C = 1;
    params.K = 1;
    params.d = 8.0;
    Graph used(8);
    CHECK_THROWS_AS(regularize_pair(gxy, hx, hy, used, params), RegularizeError);
}

TEST_CASE("one_factorize on small regular pieces") {
    SUBCASE("C4") {
        SpanningBipartitePiece piece;
        piece.host_n = 4;
        piece.parts = {{0, 2}, {1, 3}};
        piece.edges = {make_edge(0, 1), make_edge(1, 2), make_edge(2, 3), make_edge(0, 3)};
        piece.degree = 2;
        auto matchings = one_factorize(piece);
        REQUIRE(matchings.size() == 2);
        for (const auto& m : matchings) CHECK(m.size() == 2);
    }
    SUBCASE("K33") {
        auto h = complete_bipartite(3, 3);
        SpanningBipartitePiece piece;
        piece.host_n = 6;
        piece.parts = h.parts;
        piece.edges = h.graph.edges();
        piece.degree = 3;
        auto matchings = one_factorize(piece);
        REQUIRE(matchings.size() == 3);
        std::vector<Edge> all;
        for (const auto& m : matchings) {
            CHECK(m.size() == 3);
            all.insert(all.end(), m.begin(), m.end());
        }
        std::sort(all.begin(), all.end());
        CHECK(all == h.graph.edges());
    }
    SUBCASE("zero-regular piece") {
        SpanningBipartitePiece piece;
        piece.host_n = 4;
        piece.parts = {{0, 1}, {2, 3}};
        piece.degree = 0;
        CHECK(one_factorize(piece).empty());
    }
    SUBCASE("non-regular piece is rejected") {
        SpanningBipartitePiece piece;
        piece.host_n = 4;
        piece.parts = {{0, 2}, {1, 3}};
        piece.edges = {make_edge(0, 1)};
        piece.degree = 1;
        CHECK_THROWS_AS(one_factorize(piece), std::invalid_argument);
    }
}
