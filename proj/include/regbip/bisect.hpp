#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regbip/graph.hpp"
#include "regbip/rng.hpp"

namespace regbip {

// One violated (or worst surviving) bad event from a resampling run.
struct BadEventReport {
    enum class Kind { degree_concentration, goodness, uncrossed_edge };
    Kind kind = Kind::degree_concentration;
    int subject_vertex = -1;      // for vertex events
    Edge subject_edge{-1, -1};    // for uncrossed_edge
    long long observed = 0;
    double lo = 0.0;              // bounds interval
    double hi = 0.0;

    std::string describe() const;
};

struct ResampleStats {
    long long events_checked = 0;
    long long resamples = 0;
    int violations_final = 0;

    std::string to_json() const;
};

struct BisectCaps {
    long long resample_cap = 1000000;
};

class ResampleCapError : public std::runtime_error {
public:
    ResampleCapError(const std::string& what, BadEventReport worst_event, ResampleStats s)
        : std::runtime_error(what), worst(worst_event), stats(s) {}
    BadEventReport worst;
    ResampleStats stats;
};

// Matching-pair randomization state behind one bisection. The pairing is
// the canonical (2i, 2i+1) matching on the sorted ground set; an odd set
// gets a dummy partner (-1) that joins neither side.
struct BisectionPlan {
    std::vector<int> ground_set;              // sorted
    std::vector<std::pair<int, int>> pairs;   // second == -1 marks the dummy pair
    std::vector<char> decisions;              // 1: first endpoint goes left
    bool has_dummy = false;

    static BisectionPlan canonical(std::vector<int> ground);
    Bipartition realize() const;
};

struct InitialBisectionResult {
    Bipartition parts;  // {X, Y}
    ResampleStats stats;
};

// Splits V(g) so every vertex sees d/2 +- slack neighbors on each side;
// resamples violated concentration events until none remain.
InitialBisectionResult initial_bisection(const Graph& g, int d, double slack, Rng& rng,
                                         const BisectCaps& caps = {});

struct GoodBisectionConfig {
    double d = 0.0;        // host degree parameter
    double d_prime = 0.0;  // scale of gs degrees
    double eps = 0.0;      // gs degree spread, (1 +- eps) d'
    double l1_multiplier = 2.0;  // cut window: +- l1_multiplier/d'^(1/3) * deg/2
    double goodness_threshold = 0.0;
    // Opposite-side neighborhoods must also stay centered: min side at
    // least deg/2 - balance_multiplier * sqrt(deg) when that beats the
    // static threshold (the paper's events are centered windows).
    double balance_multiplier = 0.0;
    bool strict = false;   // assert the paper preconditions (needs d' >= 2^18)
};

struct GoodBisectionResult {
    Bipartition split;        // {X', X''} of the chosen side
    BipartiteGraph cut;       // gs[X', X'']
    ResampleStats stats;
};

// Bisects one side of h so gs-neighborhoods are halved within the window
// and the split stays goodness_threshold-good with respect to h.
GoodBisectionResult good_bisection(const BipartiteGraph& h, bool split_left, const Graph& gs,
                                   const GoodBisectionConfig& cfg, Rng& rng,
                                   const BisectCaps& caps = {});

struct CleanupConfig {
    double goodness_threshold = 0.0;
    double balance_multiplier = 0.0;
    // k <= 0 selects the strict count ceil(log2(Delta)) + 8.
    int k = 0;
};

struct CleanupResult {
    std::vector<Bipartition> splits;
    ResampleStats stats;
};

// k independent bisections of one side of h such that every gs edge
// crosses at least one of them and each is goodness_threshold-good.
CleanupResult cleanup_bisections(const BipartiteGraph& h, bool split_left, const Graph& gs,
                                 int max_degree, const CleanupConfig& cfg, Rng& rng,
                                 const BisectCaps& caps = {});

// Assigns each gs edge to the first bipartition it crosses; one (possibly
// empty) bipartite subgraph per bipartition. Throws if an edge crosses none.
std::vector<BipartiteGraph> decompose_by_crossings(const Graph& gs,
                                                   const std::vector<Bipartition>& bps);

// Empty result iff bp is a near-balanced split of h's chosen side and every
// opposite-side vertex keeps >= threshold neighbors in both halves.
std::vector<BadEventReport> check_goodness(const BipartiteGraph& h, bool split_left,
                                           const Bipartition& bp, double threshold);

}  // namespace regbip
