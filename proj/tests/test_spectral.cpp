#include "doctest.h"

#include <cmath>

#include "regbip/generators.hpp"
#include "regbip/spectral.hpp"

#include "oracles.hpp"

#ifdef REGBIP_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace regbip;

TEST_CASE("complete graph spectrum") {
    auto cert = certify(complete(4), 1.0 / 12.0);
    CHECK(cert.d == 3);
    CHECK(cert.lambda == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(cert.satisfied);  // 1 > 3/12
    auto eig = adjacency_spectrum(complete(4));
    CHECK(eig.back() == doctest::Approx(3.0));
    CHECK(eig.front() == doctest::Approx(-1.0));
}

TEST_CASE("even cycle spectrum") {
    auto cert = certify(circulant(6, {1}), 0.5);
    CHECK(cert.lambda == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("petersen lambda equals 2") {
    Graph p = testing::petersen();
    auto cert = certify(p, 1.0 / 12.0);
    CHECK(cert.lambda == doctest::Approx(2.0).epsilon(1e-8));

#ifdef REGBIP_HAVE_EIGEN
    // Independent dense eigendecomposition of the same adjacency matrix.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(10, 10);
    for (auto [u, v] : p.edges()) a(u, v) = a(v, u) = 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    auto ev = solver.eigenvalues();
    double oracle = std::max(std::abs(ev(8)), std::abs(ev(0)));
    CHECK(cert.lambda == doctest::Approx(oracle).epsilon(1e-8));
#endif
}

#ifdef REGBIP_HAVE_EIGEN
TEST_CASE("jacobi spectrum matches dense oracle on random regular graphs") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        Graph g = random_regular(40, 6, seed);
        auto mine = adjacency_spectrum(g);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.n(), g.n());
        for (auto [u, v] : g.edges()) a(u, v) = a(v, u) = 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
        for (int i = 0; i < g.n(); ++i)
            CHECK(mine[static_cast<std::size_t>(i)] == doctest::Approx(solver.eigenvalues()(i)).epsilon(1e-7));
    }
}
#endif

TEST_CASE("certify requires regular graphs and is deterministic") {
    Graph star(4, {make_edge(0, 1), make_edge(0, 2), make_edge(0, 3)});
    CHECK_THROWS_AS(certify(star, 0.5), std::invalid_argument);
    auto c1 = certify(complete(6), 1.0 / 12.0);
    auto c2 = certify(complete(6), 1.0 / 12.0);
    CHECK(c1.lambda == c2.lambda);
    CHECK(c1.lambda == doctest::Approx(1.0));
    CHECK(c1.satisfied == c2.satisfied);
}

TEST_CASE("lambda_1 self check across regular inputs") {
    for (std::uint64_t seed : {3ULL, 4ULL}) {
        Graph g = random_regular(30, 7, seed);
        auto eig = adjacency_spectrum(g);
        CHECK(eig.back() == doctest::Approx(7.0).epsilon(1e-6));
    }
}

TEST_CASE("mixing check basics") {
    Graph k4 = complete(4);
    auto cert = certify(k4, 1.0);
    SUBCASE("S = T = V") {
        auto mc = mixing_check(k4, cert, {0, 1, 2, 3}, {0, 1, 2, 3});
        CHECK(mc.lhs == doctest::Approx(0.0));
        CHECK(mc.holds);
    }
    SUBCASE("empty side") {
        auto mc = mixing_check(k4, cert, {}, {0, 1});
        CHECK(mc.lhs == doctest::Approx(0.0));
        CHECK(mc.rhs == doctest::Approx(0.0));
        CHECK(mc.holds);
    }
}

TEST_CASE("mixing on petersen five-cycle versus complement") {
    Graph p = testing::petersen();
    auto cert = certify(p, 1.0);
    std::vector<int> s{0, 1, 2, 3, 4}, t{5, 6, 7, 8, 9};
    CHECK(crossing_pair_count(p, s, t) == 5);
    auto mc = mixing_check(p, cert, s, t);
    CHECK(mc.lhs == doctest::Approx(2.5));   // |5 - (3/10)*25|
    CHECK(mc.rhs == doctest::Approx(10.0));  // 2 * sqrt(25)
    CHECK(mc.holds);
}

TEST_CASE("mixing holds for random subsets of a random regular graph") {
    Graph g = random_regular(60, 8, 21);
    auto cert = certify(g, 1.0);
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> s, t;
        for (int v = 0; v < g.n(); ++v) {
            if (rng.coin()) s.push_back(v);
            if (rng.coin()) t.push_back(v);
        }
        auto mc = mixing_check(g, cert, s, t);
        CHECK(mc.holds);
    }
}

TEST_CASE("power estimate stays close to the true lambda") {
    Graph g = random_regular(80, 6, 5);
    SpectralOptions dense_opts;
    auto exact = certify(g, 1.0, dense_opts);
    SpectralOptions power_opts;
    power_opts.dense_threshold = 10;  // force the estimation path
    auto est = certify(g, 1.0, power_opts);
    CHECK(est.method == "power_estimated");
    CHECK(est.lambda == doctest::Approx(exact.lambda).epsilon(1e-3));
}

TEST_CASE("certificate json shape") {
    auto cert = certify(complete(6), 1.0 / 12.0);
    std::string json = certificate_to_json(cert);
    CHECK(json.find("\"lambda\"") != std::string::npos);
    CHECK(json.find("\"method\"") != std::string::npos);
    CHECK(json.find("\"satisfied\"") != std::string::npos);
}
