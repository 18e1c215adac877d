#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "regbip/graph.hpp"
#include "regbip/rng.hpp"

namespace regbip {

// Target degrees over a bipartite vertex set, indexed by host vertex.
// Entries outside the declared sides must be zero.
struct DegreeSpec {
    std::vector<int> targets;

    long long sum_over(const std::vector<int>& side) const {
        long long s = 0;
        for (int v : side) s += targets[static_cast<std::size_t>(v)];
        return s;
    }
};

// Witness that no f-factor exists: e(S,T) < f(S) + f(T) - f(X).
struct OreCertificate {
    std::vector<int> s;      // subset of X
    std::vector<int> t_set;  // subset of Y
    long long lhs = 0;
    long long rhs = 0;

    std::string to_json() const;
};

using FactorResult = std::variant<Graph, OreCertificate>;

// Spanning subgraph of h with deg(v) == f(v) for every declared vertex,
// via Dinic max-flow, or a validated Ore certificate from the min cut.
FactorResult f_factor(const BipartiteGraph& h, const DegreeSpec& f);

struct ProbeReport {
    int trials = 0;
    int successes = 0;
    int vacuous = 0;  // trials whose f-value range held no integer
    std::optional<OreCertificate> first_failure;

    std::string to_json() const;
};

// Monte Carlo check that h stays f-factorable after deleting a bounded-degree
// subgraph, for random near-constant integer demands.
ProbeReport probe_robust_matchability(const BipartiteGraph& h, double d, double rho, double alpha,
                                      double gamma, int trials, Rng& rng);

struct RegularizationParams {
    double rho = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    int K = 0;
    double d = 0.0;
    int C = 0;  // uniform top-up; strict mode uses ceil((1-gamma) rho d / K)
    bool strict = false;
    double spread_cap = 0.0;          // (A1) bound to enforce
    double goodness_threshold = 0.0;  // (A3) threshold
    double used_degree_cap = 0.0;     // cumulative absorber consumption bound

    static RegularizationParams strict_params(double rho, double alpha, double gamma, int K, double d);
};

// Thrown when a regularization precondition fails or a needed factor is
// missing; carries the certificate when one was produced.
class RegularizeError : public std::runtime_error {
public:
    RegularizeError(const std::string& what, std::optional<OreCertificate> cert = std::nullopt)
        : std::runtime_error(what), certificate(std::move(cert)) {}
    std::optional<OreCertificate> certificate;
};

struct RegularizeOutcome {
    Graph r_prime;                  // factor on [X', Y']
    Graph r_doubleprime;            // factor on [X'', Y'']
    SpanningBipartitePiece merged;  // hx + hy + r' + r'', regular
};

// Tops the pair (hx, hy) up to a common degree C + max-degree using
// absorber edges outside `used`. hx and hy carry their own bipartitions;
// the caller accumulates r' and r'' into `used` between calls.
RegularizeOutcome regularize_pair(const BipartiteGraph& gxy, const BipartiteGraph& hx,
                                  const BipartiteGraph& hy, const Graph& used,
                                  const RegularizationParams& params);

// Exactly `degree` pairwise disjoint perfect matchings partitioning the
// piece; repeated Hopcroft-Karp maximum matchings.
std::vector<std::vector<Edge>> one_factorize(const SpanningBipartitePiece& piece);

}  // namespace regbip
