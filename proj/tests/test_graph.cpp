#include "doctest.h"

#include <sstream>

#include "regbip/generators.hpp"
#include "regbip/graph.hpp"
#include "regbip/rng.hpp"

#include "oracles.hpp"

using namespace regbip;

TEST_CASE("graph construction validates invariants") {
    CHECK_THROWS_AS(Graph(3, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph(3, {{0, 1}, {0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph(3, {{0, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(make_edge(2, 2), std::invalid_argument);

    Graph g(4, {make_edge(2, 0), make_edge(1, 0)});
    CHECK(g.edge_count() == 2);
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(2, 0));
    CHECK_FALSE(g.has_edge(1, 2));
    CHECK(g.neighbors(0) == std::vector<int>{1, 2});
}

TEST_CASE("induced_subgraph") {
    Graph k4 = complete(4);
    SUBCASE("identity") {
        auto sub = induced_subgraph(k4, {0, 1, 2, 3});
        CHECK(sub.graph.n() == 4);
        CHECK(sub.graph.edge_count() == 6);
        CHECK(sub.to_host == std::vector<int>{0, 1, 2, 3});
    }
    SUBCASE("pair from complete graph") {
        auto sub = induced_subgraph(k4, {0, 1});
        CHECK(sub.graph.n() == 2);
        CHECK(sub.graph.edge_count() == 1);
    }
    SUBCASE("non-adjacent pair of a path") {
        Graph path(3, {make_edge(0, 1), make_edge(1, 2)});
        auto sub = induced_subgraph(path, {0, 2});
        CHECK(sub.graph.n() == 2);
        CHECK(sub.graph.edge_count() == 0);
    }
    SUBCASE("out of range errors") {
        CHECK_THROWS_AS(induced_subgraph(k4, {0, 9}), std::out_of_range);
    }
    SUBCASE("label map translates back to host") {
        auto sub = induced_subgraph(k4, {1, 3});
        REQUIRE(sub.graph.edge_count() == 1);
        Edge e = sub.graph.edges()[0];
        CHECK(make_edge(sub.to_host[static_cast<std::size_t>(e.first)],
                        sub.to_host[static_cast<std::size_t>(e.second)]) == make_edge(1, 3));
    }
}

TEST_CASE("induced_bipartite") {
    SUBCASE("complete graph cut is complete bipartite") {
        auto h = induced_bipartite(complete(4), {{0, 1}, {2, 3}});
        CHECK(h.graph.edge_count() == 4);
        for (auto [u, v] : h.graph.edges()) CHECK(((u <= 1 && v >= 2)));
    }
    SUBCASE("edgeless stays edgeless") {
        auto h = induced_bipartite(Graph(5), {{0, 2}, {1, 3}});
        CHECK(h.graph.edge_count() == 0);
    }
    SUBCASE("even cycle with alternating sides keeps everything") {
        Graph c6 = circulant(6, {1});
        auto h = induced_bipartite(c6, {{0, 2, 4}, {1, 3, 5}});
        CHECK(h.graph.edge_count() == 6);
    }
    SUBCASE("overlapping sides error") {
        CHECK_THROWS_AS(induced_bipartite(complete(4), {{0, 1}, {1, 2}}), std::invalid_argument);
    }
}

TEST_CASE("degree_stats") {
    auto k5 = degree_stats(complete(5));
    CHECK(k5.min_degree == 4);
    CHECK(k5.max_degree == 4);
    CHECK(k5.edge_count == 10);

    Graph star(4, {make_edge(0, 1), make_edge(0, 2), make_edge(0, 3)});
    auto st = degree_stats(star);
    CHECK(st.min_degree == 1);
    CHECK(st.max_degree == 3);
    CHECK(st.edge_count == 3);

    auto empty = degree_stats(Graph(3));
    CHECK(empty.min_degree == 0);
    CHECK(empty.max_degree == 0);
    CHECK(empty.edge_count == 0);
}

TEST_CASE("crossing_pair_count") {
    Graph triangle = complete(3);
    CHECK(crossing_pair_count(triangle, {0, 1, 2}, {0, 1, 2}) == 6);
    Graph one(2, {make_edge(0, 1)});
    CHECK(crossing_pair_count(one, {0}, {1}) == 1);
    CHECK(crossing_pair_count(complete(4), {0, 1}, {2, 3}) == 4);
}

TEST_CASE("crossing count symmetry and induced edge identity") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        Graph g = testing::random_graph(12, 0.4, rng);
        std::vector<int> a, b;
        for (int v = 0; v < g.n(); ++v) {
            double r = rng.unit_real();
            if (r < 0.33)
                a.push_back(v);
            else if (r < 0.66)
                b.push_back(v);
        }
        if (a.empty() || b.empty()) continue;
        long long ab = crossing_pair_count(g, a, b);
        CHECK(ab == crossing_pair_count(g, b, a));
        CHECK(ab == induced_bipartite(g, {a, b}).graph.edge_count());

        std::vector<int> s(a);
        s.insert(s.end(), b.begin(), b.end());
        auto sub = induced_subgraph(g, s);
        long long degree_sum = 0;
        for (int v = 0; v < sub.graph.n(); ++v) degree_sum += sub.graph.degree(v);
        CHECK(degree_sum == 2LL * sub.graph.edge_count());
    }
}

TEST_CASE("graph set operations") {
    Graph a(4, {make_edge(0, 1), make_edge(1, 2)});
    Graph b(4, {make_edge(1, 2), make_edge(2, 3)});
    CHECK(graph_union(a, b).edge_count() == 3);
    CHECK(graph_difference(a, b).edge_count() == 1);
    CHECK(graph_difference(a, b).has_edge(0, 1));
}

TEST_CASE("edge list format round trip") {
    Graph g = circulant(7, {1, 2});
    std::ostringstream out;
    write_edge_list(out, g);
    std::istringstream in(out.str());
    Graph back = read_edge_list(in);
    CHECK(back.n() == g.n());
    CHECK(back.edges() == g.edges());
}

TEST_CASE("edge list parse errors carry line numbers") {
    auto expect_error = [](const std::string& text, const std::string& fragment) {
        std::istringstream in(text);
        try {
            read_edge_list(in);
            FAIL("expected parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_error("", "line 1");
    expect_error("3 2\n0 1\n", "line 3");
    expect_error("3 1\n0 5\n", "line 2");
    expect_error("3 1\n1 1\n", "line 2");
    expect_error("3 1\n0 1 7\n", "line 2");
}
