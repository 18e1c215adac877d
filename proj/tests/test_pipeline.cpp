#include "doctest.h"

#include <set>

#include "regbip/generators.hpp"
#include "regbip/pipeline.hpp"

using namespace regbip;

TEST_CASE("decompose the single edge graph") {
    auto result = decompose(complete(2), PipelineParams::practical(1));
    CHECK(result.report.all_green());
    CHECK(result.report.part_count == 1);
    CHECK(result.decomposition.pieces[0].degree == 1);
}

TEST_CASE("decompose a 4-cycle and cross-check its factorization") {
    Graph c4 = circulant(4, {1});
    auto result = decompose(c4, PipelineParams::practical(2));
    CHECK(result.report.all_green());
    auto fac = one_factorization(c4, PipelineParams::practical(2));
    CHECK(fac.matchings.size() == 2);
}

TEST_CASE("K4 has its unique 1-factorization") {
    auto fac = one_factorization(complete(4), PipelineParams::practical(3));
    REQUIRE(fac.matchings.size() == 3);
    std::set<std::set<Edge>> got;
    for (const auto& m : fac.matchings) got.insert(std::set<Edge>(m.begin(), m.end()));
    std::set<std::set<Edge>> expected{
        {make_edge(0, 1), make_edge(2, 3)},
        {make_edge(0, 2), make_edge(1, 3)},
        {make_edge(0, 3), make_edge(1, 2)},
    };
    CHECK(got == expected);
}

TEST_CASE("decompose a mid-size complete graph") {
    auto result = decompose(complete(16), PipelineParams::practical(4));
    CHECK(result.report.all_green());
    CHECK(result.report.part_count <= result.report.bound);
    long long total = 0;
    for (const auto& piece : result.decomposition.pieces) total += static_cast<long long>(piece.edges.size());
    CHECK(total == complete(16).edge_count());
}

TEST_CASE("decompose a random regular graph and recount pieces") {
    Graph g = random_regular(64, 12, 11);
    auto result = decompose(g, PipelineParams::practical(11));
    CHECK(result.report.all_green());

    // Piece degrees sum to d: each vertex's incident edges split exactly.
    long long degree_sum = 0;
    for (int deg : result.report.piece_degrees) degree_sum += deg;
    CHECK(degree_sum == 12);
}

TEST_CASE("decompose rejects bad inputs") {
    CHECK_THROWS(decompose(complete(5), PipelineParams::practical(1)));  // odd n ... K5 is 4-regular on 5 vertices
    Graph star(4, {make_edge(0, 1), make_edge(0, 2), make_edge(0, 3)});
    CHECK_THROWS(decompose(star, PipelineParams::practical(1)));  // not regular
}

TEST_CASE("strict mode refuses desk-scale degrees") {
    CHECK_THROWS(decompose(complete(16), PipelineParams::strict_mode(1)));
}

TEST_CASE("verify catches hand-made decompositions and corruptions") {
    Graph c4 = circulant(4, {1});
    Decomposition dec;
    dec.host = c4;
    SpanningBipartitePiece m1;
    m1.host_n = 4;
    m1.parts = {{0, 2}, {1, 3}};
    m1.edges = {make_edge(0, 1), make_edge(2, 3)};
    m1.degree = 1;
    SpanningBipartitePiece m2 = m1;
    m2.edges = {make_edge(1, 2), make_edge(0, 3)};
    dec.pieces = {m1, m2};

    SUBCASE("valid decomposition is all green") {
        auto report = verify(c4, dec);
        CHECK(report.all_green());
        CHECK(report.part_count == 2);
        CHECK(report.piece_degrees == std::vector<int>{1, 1});
    }
    SUBCASE("deleting an edge breaks the partition") {
        dec.pieces[1].edges.pop_back();
        auto report = verify(c4, dec);
        CHECK_FALSE(report.edge_partition_ok);
    }
    SUBCASE("a within-side edge breaks bipartiteness") {
        dec.pieces[1].edges = {make_edge(1, 2), make_edge(0, 2)};
        auto report = verify(c4, dec);
        CHECK_FALSE(report.all_bipartite);
    }
    SUBCASE("duplicated edge across pieces is caught") {
        dec.pieces[1].edges = {make_edge(0, 1), make_edge(2, 3)};
        auto report = verify(c4, dec);
        CHECK_FALSE(report.edge_partition_ok);
    }
    SUBCASE("missing vertex in the bipartition breaks spanning") {
        dec.pieces[1].parts = {{0, 2}, {1}};
        auto report = verify(c4, dec);
        CHECK_FALSE(report.all_spanning);
    }
}

TEST_CASE("decomposition json round trip preserves verification") {
    Graph g = random_regular(32, 6, 13);
    auto params = PipelineParams::practical(13);
    auto result = decompose(g, params);
    auto j = decomposition_to_json(result, params, false);
    Decomposition back = decomposition_from_json(j);
    back.host = g;
    auto report = verify(g, back);
    CHECK(report.all_green());
    CHECK(report.part_count == result.report.part_count);
}

TEST_CASE("identical seeds give identical decomposition json") {
    Graph g = random_regular(48, 8, 21);
    auto params = PipelineParams::practical(21);
    auto a = decomposition_to_json(decompose(g, params), params, false);
    auto b = decomposition_to_json(decompose(g, params), params, false);
    CHECK(a.dump() == b.dump());
}
