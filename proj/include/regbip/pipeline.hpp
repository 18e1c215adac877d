#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regbip/graph.hpp"

namespace regbip {

struct PipelineParams {
    enum class Mode { strict, practical };
    Mode mode = Mode::practical;

    double rho = 1.0 / 200.0;
    double alpha = 1.0 / 200.0;
    double gamma = 1.0 / 30.0;
    std::uint64_t seed = 0;
    long long resample_cap = 1000000;

    // Practical profile. Strict mode ignores these and uses the exact
    // constants (slack d^(2/3), window 2/d'^(1/3), threshold d/5, k = 27,
    // M = floor(log2 d) - 18), refusing inputs where they are infeasible.
    int stop_degree = 3;                    // iterate until both remainders have max degree <= this
    double initial_slack_multiplier = 1.0;  // slack = mult * sqrt(d), ~2 sigma of Bin(d,1/2)
    double l1_multiplier = 4.0;             // cut window +- mult/d'^(1/3) * deg/2
    double goodness_fraction = 0.125;       // threshold = fraction * d
    double balance_multiplier = 1.2;        // opposite-side split window deg/2 +- mult*sqrt(deg)
    double trim_slack = 0.0;                // cut kept-degree target = ceil(avg) + trim_slack
    int cleanup_extra = 1;                  // k = ceil(log2 Delta) + extra
    int max_iterations = 64;
    int max_attempts = 16;                  // Las Vegas restarts on stage failure

    static PipelineParams practical(std::uint64_t seed);
    static PipelineParams strict_mode(std::uint64_t seed);

    const char* mode_name() const { return mode == Mode::strict ? "strict" : "practical"; }

    double initial_slack(int d) const;
    // goodness_fraction * d capped by what the initial slack can guarantee:
    // every cut degree is at least d/2 - slack, and a vertex can only keep
    // floor(cut/2) neighbors on both sides of a split.
    double goodness_threshold(int d) const;
};

struct VerificationReport {
    bool edge_partition_ok = false;
    bool all_spanning = false;
    bool all_bipartite = false;
    bool all_regular = false;
    std::vector<int> piece_degrees;
    int part_count = 0;
    double bound = 0.0;  // log2 d + 36
    bool within_bound = false;

    bool all_green() const {
        return edge_partition_ok && all_spanning && all_bipartite && all_regular && within_bound;
    }
    nlohmann::json to_json() const;
};

struct DecomposeResult {
    Decomposition decomposition;
    VerificationReport report;
    nlohmann::json trace;
};

// Stage failures carry the stage name and the trace accumulated up to the
// failure point.
class PipelineError : public std::runtime_error {
public:
    PipelineError(const std::string& what, std::string stage_name, nlohmann::json trace_so_far)
        : std::runtime_error(what), stage(std::move(stage_name)), trace(std::move(trace_so_far)) {}
    std::string stage;
    nlohmann::json trace;
};

// Full randomized pipeline: absorber bisection, iterated good bisections
// with edge-count equalization, cleanup, refinement pairing, f-factor
// regularization, leftover piece, unconditional verification. Throws on
// any stage failure or if verification is not all-green.
DecomposeResult decompose(const Graph& g, const PipelineParams& params);

// Recomputes every property from raw edges; trusts nothing upstream.
VerificationReport verify(const Graph& g, const Decomposition& dec);

struct OneFactorizationResult {
    std::vector<std::vector<Edge>> matchings;
    nlohmann::json trace;
};

// Decompose, then split every piece into perfect matchings: exactly d
// pairwise disjoint perfect matchings partitioning E(g).
OneFactorizationResult one_factorization(const Graph& g, const PipelineParams& params);

nlohmann::json decomposition_to_json(const DecomposeResult& result, const PipelineParams& params,
                                     bool with_timestamp);
Decomposition decomposition_from_json(const nlohmann::json& j);
nlohmann::json matchings_to_json(const Graph& g, const OneFactorizationResult& result);

}  // namespace regbip
