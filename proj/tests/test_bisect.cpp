#include "doctest.h"

#include <cmath>
#include <set>

#include "regbip/bisect.hpp"
#include "regbip/generators.hpp"

#include "oracles.hpp"

using namespace regbip;

namespace {

// Recount the concentration guarantee directly from the graph.
void recount_initial(const Graph& g, int d, double slack, const Bipartition& parts) {
    CHECK(parts.left.size() == parts.right.size());
    auto lmask = vertex_mask(g.n(), parts.left);
    for (int v = 0; v < g.n(); ++v) {
        int in_left = 0;
        for (int w : g.neighbors(v))
            if (lmask[static_cast<std::size_t>(w)]) ++in_left;
        CHECK(in_left >= d / 2.0 - slack - 1e-9);
        CHECK(in_left <= d / 2.0 + slack + 1e-9);
        int in_right = g.degree(v) - in_left;
        CHECK(in_right >= d / 2.0 - slack - 1e-9);
        CHECK(in_right <= d / 2.0 + slack + 1e-9);
    }
}

}  // namespace

TEST_CASE("initial_bisection on K2") {
    Rng rng(1);
    auto result = initial_bisection(complete(2), 1, 1.0, rng);
    recount_initial(complete(2), 1, 1.0, result.parts);
}

TEST_CASE("initial_bisection on K4 needs no resampling") {
    Rng rng(2);
    double slack = std::pow(3.0, 2.0 / 3.0);
    auto result = initial_bisection(complete(4), 3, slack, rng);
    CHECK(result.stats.resamples == 0);
    recount_initial(complete(4), 3, slack, result.parts);
}

TEST_CASE("initial_bisection rejects bad inputs") {
    Rng rng(3);
    CHECK_THROWS_AS(initial_bisection(complete(3), 2, 1.0, rng), std::invalid_argument);
    Graph star(4, {make_edge(0, 1), make_edge(0, 2), make_edge(0, 3)});
    CHECK_THROWS_AS(initial_bisection(star, 3, 1.0, rng), std::invalid_argument);
}

TEST_CASE("initial_bisection on a random regular fixture") {
    Graph g = random_regular(200, 32, 7);
    Rng rng(7);
    double slack = std::pow(32.0, 2.0 / 3.0);
    auto result = initial_bisection(g, 32, slack, rng);
    recount_initial(g, 32, slack, result.parts);

    // Determinism: identical seed reproduces the split and the stats.
    Rng rng2(7);
    auto again = initial_bisection(g, 32, slack, rng2);
    CHECK(again.parts.left == result.parts.left);
    CHECK(again.stats.resamples == result.stats.resamples);
}

TEST_CASE("initial_bisection reports cap exceedance with the worst event") {
    // Impossible demand: slack 0 on an odd-degree graph forces failure.
    Graph g = complete(4);
    Rng rng(4);
    BisectCaps caps{5};
    try {
        initial_bisection(g, 3, 0.0, rng, caps);
        FAIL("expected ResampleCapError");
    } catch (const ResampleCapError& e) {
        CHECK(e.stats.resamples == 5);
        CHECK(e.worst.kind == BadEventReport::Kind::degree_concentration);
        CHECK(e.stats.violations_final > 0);
    }
}

namespace {

BipartiteGraph host_with_sides(const Graph& g, std::vector<int> left, std::vector<int> right) {
    return induced_bipartite(g, {std::move(left), std::move(right)});
}

void recount_good_bisection(const BipartiteGraph& h, const Graph& gs, const GoodBisectionResult& r,
                            double threshold, double window) {
    // (G1)
    auto sz = static_cast<long long>(r.split.left.size()) - static_cast<long long>(r.split.right.size());
    CHECK(sz >= -1);
    CHECK(sz <= 1);
    // (L1)
    auto lmask = vertex_mask(gs.n(), r.split.left);
    std::vector<int> side = r.split.left;
    side.insert(side.end(), r.split.right.begin(), r.split.right.end());
    for (int x : side) {
        int deg = gs.degree(x);
        if (deg == 0) continue;
        int cut = 0;
        for (int w : gs.neighbors(x))
            if (lmask[static_cast<std::size_t>(w)]) ++cut;
        if (std::binary_search(r.split.left.begin(), r.split.left.end(), x)) cut = deg - cut;
        // cut-degree of x = neighbors on the other side of the split
        CHECK(cut >= (1.0 - window) * deg / 2.0 - 1e-9);
        CHECK(cut <= (1.0 + window) * deg / 2.0 + 1e-9);
    }
    // (L2) via the library checker plus direct recount
    CHECK(check_goodness(h, true, r.split, threshold).empty());
}

}  // namespace

TEST_CASE("good_bisection with an edgeless side graph") {
    Graph host = complete(8);
    auto h = host_with_sides(host, {0, 1, 2, 3}, {4, 5, 6, 7});
    Graph gs(8);
    GoodBisectionConfig cfg;
    cfg.d = 7;
    cfg.d_prime = 4;
    cfg.l1_multiplier = 2.0;
    cfg.goodness_threshold = 2.0;  // h-degrees are 4, so both halves must keep 2
    Rng rng(11);
    auto result = good_bisection(h, true, gs, cfg, rng);
    recount_good_bisection(h, gs, result, 2.0, 2.0 / std::cbrt(4.0));
    CHECK(result.cut.graph.edge_count() == 0);
}

TEST_CASE("good_bisection with a perfect matching side graph and wide window") {
    Graph host = complete(8);
    auto h = host_with_sides(host, {0, 1, 2, 3}, {4, 5, 6, 7});
    Graph gs(8, {make_edge(0, 1), make_edge(2, 3)});
    GoodBisectionConfig cfg;
    cfg.d = 7;
    cfg.d_prime = 1;
    cfg.l1_multiplier = 2.0;  // window (1 +- 2) * deg/2 covers both 0 and 1
    cfg.goodness_threshold = 1.0;
    Rng rng(12);
    auto result = good_bisection(h, true, gs, cfg, rng);
    recount_good_bisection(h, gs, result, 1.0, 2.0);
}

TEST_CASE("good_bisection pipeline fixture recounted at the practical threshold") {
    // The paper-exact threshold d/5 needs every cut degree >= 2d/5, which no
    // achievable initial slack gives at d = 64; the practical profile caps
    // the threshold at what the slack guarantees (here d/8 = 8).
    Graph g = random_regular(400, 64, 3);
    Rng rng(3);
    const double slack = 1.25 * std::sqrt(64.0);
    auto initial = initial_bisection(g, 64, slack, rng);
    BipartiteGraph gxy = induced_bipartite(g, initial.parts);

    auto mask = vertex_mask(g.n(), initial.parts.left);
    std::vector<Edge> inner;
    for (const Edge& e : g.edges())
        if (mask[static_cast<std::size_t>(e.first)] && mask[static_cast<std::size_t>(e.second)])
            inner.push_back(e);
    Graph gs(g.n(), std::move(inner));

    GoodBisectionConfig cfg;
    cfg.d = 64;
    cfg.d_prime = 32;
    cfg.l1_multiplier = 4.0;
    cfg.goodness_threshold = 8.0;
    Rng rng2(33);
    auto result = good_bisection(gxy, true, gs, cfg, rng2);

    // Direct recount of (L2): every y keeps at least 8 neighbors on each
    // side of the split.
    auto lmask = vertex_mask(g.n(), result.split.left);
    for (int y : initial.parts.right) {
        int cl = 0, total = 0;
        for (int w : gxy.graph.neighbors(y)) {
            ++total;
            if (lmask[static_cast<std::size_t>(w)]) ++cl;
        }
        CHECK(cl >= 8);
        CHECK(total - cl >= 8);
    }
    recount_good_bisection(gxy, gs, result, 8.0, 4.0 / std::cbrt(32.0));
}

TEST_CASE("check_goodness") {
    Graph host(8, [] {
        std::vector<Edge> edges;
        for (int u = 0; u < 4; ++u)
            for (int v = 4; v < 8; ++v) edges.push_back(make_edge(u, v));
        return edges;
    }());
    auto h = host_with_sides(host, {0, 1, 2, 3}, {4, 5, 6, 7});
    SUBCASE("balanced split of K44 is 2-good") {
        CHECK(check_goodness(h, true, {{0, 1}, {2, 3}}, 2.0).empty());
    }
    SUBCASE("4|0 split violates G1 and G2") {
        auto reports = check_goodness(h, true, {{0, 1, 2, 3}, {}}, 2.0);
        CHECK(reports.size() >= 2);
        CHECK(reports.front().kind == BadEventReport::Kind::goodness);
    }
    SUBCASE("vertex with one neighbor fails threshold 1 on one side") {
        Graph sparse(4, {make_edge(0, 2), make_edge(1, 2), make_edge(0, 3), make_edge(1, 3)});
        auto hs = host_with_sides(sparse, {0, 1}, {2, 3});
        auto reports = check_goodness(hs, true, {{0}, {1}}, 1.0);
        CHECK(reports.empty());
        Graph star(4, {make_edge(0, 2), make_edge(0, 3), make_edge(1, 3)});
        auto hstar = host_with_sides(star, {0, 1}, {2, 3});
        auto bad = check_goodness(hstar, true, {{0}, {1}}, 1.0);
        CHECK(!bad.empty());  // y=2 has its single neighbor on one side only
    }
    SUBCASE("bipartition must cover the side") {
        CHECK_THROWS_AS(check_goodness(h, true, {{0, 1}, {2}}, 1.0), std::invalid_argument);
    }
}

TEST_CASE("cleanup_bisections on an edgeless graph uses the strict count") {
    Graph host = complete(8);
    auto h = host_with_sides(host, {0, 1, 2, 3}, {4, 5, 6, 7});
    CleanupConfig cfg;
    cfg.goodness_threshold = 1.0;
    cfg.k = 0;  // strict: ceil(log2 1) + 8 = 8
    Rng rng(13);
    auto result = cleanup_bisections(h, true, Graph(8), 1, cfg, rng);
    CHECK(result.splits.size() == 8);
    for (const auto& bp : result.splits) CHECK(check_goodness(h, true, bp, 1.0).empty());
}

TEST_CASE("cleanup_bisections separates a single edge") {
    Graph host = complete(8);
    auto h = host_with_sides(host, {0, 1, 2, 3}, {4, 5, 6, 7});
    Graph gs(8, {make_edge(0, 1)});
    CleanupConfig cfg;
    cfg.goodness_threshold = 1.0;
    cfg.k = 0;
    Rng rng(14);
    auto result = cleanup_bisections(h, true, gs, 1, cfg, rng);
    bool separated = false;
    for (const auto& bp : result.splits) {
        bool left0 = std::binary_search(bp.left.begin(), bp.left.end(), 0);
        bool left1 = std::binary_search(bp.left.begin(), bp.left.end(), 1);
        if (left0 != left1) separated = true;
    }
    CHECK(separated);
}

TEST_CASE("cleanup_bisections covers a pipeline-scale leftover") {
    Graph g = random_regular(120, 16, 9);
    Rng rng(9);
    auto initial = initial_bisection(g, 16, 1.25 * std::sqrt(16.0), rng);
    BipartiteGraph gxy = induced_bipartite(g, initial.parts);
    auto mask = vertex_mask(g.n(), initial.parts.left);
    std::vector<Edge> inner;
    for (const Edge& e : g.edges())
        if (mask[static_cast<std::size_t>(e.first)] && mask[static_cast<std::size_t>(e.second)])
            inner.push_back(e);
    Graph gs(g.n(), std::move(inner));
    int delta = side_degree_stats(gs, initial.parts.left).max_degree;

    CleanupConfig cfg;
    cfg.goodness_threshold = 2.0;
    cfg.k = static_cast<int>(std::ceil(std::log2(std::max(2, delta)))) + 2;
    Rng rng2(10);
    auto result = cleanup_bisections(gxy, true, gs, delta, cfg, rng2);
    auto pieces = decompose_by_crossings(gs, result.splits);

    // (M1) + exact edge partition via the first-crossing assignment.
    long long total = 0;
    std::set<Edge> seen;
    for (const auto& piece : pieces) {
        total += piece.graph.edge_count();
        for (const Edge& e : piece.graph.edges()) {
            CHECK(seen.insert(e).second);
            bool l = std::binary_search(piece.parts.left.begin(), piece.parts.left.end(), e.first);
            bool r = std::binary_search(piece.parts.right.begin(), piece.parts.right.end(), e.second);
            bool l2 = std::binary_search(piece.parts.left.begin(), piece.parts.left.end(), e.second);
            bool r2 = std::binary_search(piece.parts.right.begin(), piece.parts.right.end(), e.first);
            CHECK(((l && r) || (l2 && r2)));
        }
    }
    CHECK(total == gs.edge_count());
    // (M2)
    for (const auto& bp : result.splits) CHECK(check_goodness(gxy, true, bp, 2.0).empty());
}

TEST_CASE("decompose_by_crossings on a triangle") {
    Graph triangle = complete(3);
    std::vector<Bipartition> bps{{{0}, {1, 2}}, {{1}, {0, 2}}, {{2}, {0, 1}}};
    auto pieces = decompose_by_crossings(triangle, bps);
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0].graph.edge_count() == 2);
    CHECK(pieces[1].graph.edge_count() == 1);
    CHECK(pieces[2].graph.edge_count() == 0);
}

TEST_CASE("decompose_by_crossings reports uncrossed edges") {
    Graph g(4, {make_edge(0, 1)});
    std::vector<Bipartition> bps{{{0, 1}, {2, 3}}};
    CHECK_THROWS_AS(decompose_by_crossings(g, bps), std::runtime_error);
}

TEST_CASE("bisection determinism across identical streams") {
    Graph g = random_regular(60, 8, 17);
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        auto initial = initial_bisection(g, 8, 1.25 * std::sqrt(8.0), rng);
        return std::make_pair(initial.parts.left, initial.stats.resamples);
    };
    CHECK(run(5) == run(5));
}
