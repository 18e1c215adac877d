#include "regbip/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <numeric>
#include <set>

#include "regbip/bisect.hpp"
#include "regbip/edge_tools.hpp"
#include "regbip/factor.hpp"
#include "regbip/rng.hpp"
#include "regbip/spectral.hpp"

namespace regbip {

PipelineParams PipelineParams::practical(std::uint64_t seed) {
    PipelineParams p;
    p.mode = Mode::practical;
    p.seed = seed;
    return p;
}

PipelineParams PipelineParams::strict_mode(std::uint64_t seed) {
    PipelineParams p;
    p.mode = Mode::strict;
    p.seed = seed;
    return p;
}

double PipelineParams::initial_slack(int d) const {
    if (mode == Mode::strict) return std::pow(d, 2.0 / 3.0);
    return initial_slack_multiplier * std::sqrt(static_cast<double>(d));
}

double PipelineParams::goodness_threshold(int d) const {
    if (mode == Mode::strict) return d / 5.0;
    const double min_cut = std::ceil(d / 2.0 - initial_slack(d) - 1e-9);
    const double feasible = std::floor(std::max(0.0, min_cut) / 2.0);
    return std::max(0.0, std::min(goodness_fraction * d, feasible));
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json j;
    j["edge_partition_ok"] = edge_partition_ok;
    j["all_spanning"] = all_spanning;
    j["all_bipartite"] = all_bipartite;
    j["all_regular"] = all_regular;
    j["piece_degrees"] = piece_degrees;
    j["part_count"] = part_count;
    j["bound"] = bound;
    j["within_bound"] = within_bound;
    j["all_green"] = all_green();
    return j;
}

namespace {

[[noreturn]] void stage_fail_with(const nlohmann::json& trace, const std::string& stage,
                                  const std::string& what) {
    throw PipelineError("pipeline stage '" + stage + "' failed: " + what, stage, trace);
}

Graph within_side_subgraph(const Graph& g, const std::vector<int>& side) {
    auto mask = vertex_mask(g.n(), side);
    std::vector<Edge> edges;
    for (const Edge& e : g.edges())
        if (mask[static_cast<std::size_t>(e.first)] && mask[static_cast<std::size_t>(e.second)])
            edges.push_back(e);
    return Graph(g.n(), std::move(edges));
}

nlohmann::json stats_json(const ResampleStats& s) {
    return nlohmann::json{{"events_checked", s.events_checked},
                          {"resamples", s.resamples},
                          {"violations_final", s.violations_final}};
}

int count_degree_window_violations(const Graph& g, const std::vector<int>& side, double center,
                                   double halfwidth) {
    int bad = 0;
    for (int v : side)
        if (std::abs(g.degree(v) - center) > halfwidth + 1e-9) ++bad;
    return bad;
}

std::vector<BipartiteGraph> nonempty_pieces(std::vector<BipartiteGraph> pieces) {
    std::vector<BipartiteGraph> out;
    for (auto& p : pieces)
        if (p.graph.edge_count() > 0) out.push_back(std::move(p));
    return out;
}

// Largest edge count m <= m0 such that removing whole Vizing classes
// (largest first, the same order m_edge_subgraph uses) brings the kept
// piece's max degree down to target. Removed edges are recycled by the
// caller, so trimming deeper than the equalizing minimum only defers edges
// to later rounds.
int deep_trim_count(const Graph& cut, int m0, int target) {
    std::vector<int> deg(static_cast<std::size_t>(cut.n()), 0);
    for (const Edge& e : cut.edges()) {
        ++deg[static_cast<std::size_t>(e.first)];
        ++deg[static_cast<std::size_t>(e.second)];
    }
    int max_deg = *std::max_element(deg.begin(), deg.end());
    if (cut.edge_count() <= m0 && max_deg <= target) return m0;

    EdgeColoring coloring = vizing_color(cut);
    std::vector<std::vector<Edge>> classes(static_cast<std::size_t>(coloring.k));
    for (int i = 0; i < cut.edge_count(); ++i)
        classes[static_cast<std::size_t>(coloring.color[static_cast<std::size_t>(i)])].push_back(
            cut.edges()[static_cast<std::size_t>(i)]);
    std::vector<int> order(classes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return classes[static_cast<std::size_t>(a)].size() > classes[static_cast<std::size_t>(b)].size();
    });
    int m = cut.edge_count();
    for (int idx : order) {
        if (m <= m0 && max_deg <= target) break;
        if (m <= 1) break;
        for (const Edge& e : classes[static_cast<std::size_t>(idx)]) {
            --deg[static_cast<std::size_t>(e.first)];
            --deg[static_cast<std::size_t>(e.second)];
        }
        m -= static_cast<int>(classes[static_cast<std::size_t>(idx)].size());
        max_deg = *std::max_element(deg.begin(), deg.end());
    }
    return std::max(1, std::min(m, m0));
}

// Trim a cut piece to exactly m_goal edges, preferring whole large Vizing
// classes and never dropping a vertex below its proportional share minus
// one while alternatives remain. Bounding every vertex's kept degree from
// below keeps its absorber demand (max degree - own degree) within the
// availability the goodness floor guarantees.
struct TrimOutcome {
    Graph kept;
    Graph removed;
};

TrimOutcome proportional_trim(const Graph& cut, int m_goal) {
    const int e = cut.edge_count();
    std::vector<int> orig(static_cast<std::size_t>(cut.n()), 0);
    for (const Edge& edge : cut.edges()) {
        ++orig[static_cast<std::size_t>(edge.first)];
        ++orig[static_cast<std::size_t>(edge.second)];
    }
    std::vector<int> deg = orig;
    auto floor_of = [&](int v, int m_after) {
        return std::max(0, static_cast<int>(std::floor(static_cast<double>(orig[static_cast<std::size_t>(v)]) *
                                                       m_after / e)) -
                               1);
    };

    EdgeColoring coloring = vizing_color(cut);
    std::vector<std::vector<Edge>> classes(static_cast<std::size_t>(coloring.k));
    for (int i = 0; i < e; ++i)
        classes[static_cast<std::size_t>(coloring.color[static_cast<std::size_t>(i)])].push_back(
            cut.edges()[static_cast<std::size_t>(i)]);
    std::vector<int> order(classes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return classes[static_cast<std::size_t>(a)].size() > classes[static_cast<std::size_t>(b)].size();
    });

    std::vector<char> removed_class(classes.size(), 0);
    std::set<Edge> removed_edges;
    int m = e;
    for (bool respect_floors : {true, false}) {
        for (int ci : order) {
            if (m <= m_goal) break;
            if (removed_class[static_cast<std::size_t>(ci)]) continue;
            const auto& cls = classes[static_cast<std::size_t>(ci)];
            if (m - static_cast<int>(cls.size()) < m_goal) continue;
            if (respect_floors) {
                bool ok = true;
                int m_after = m - static_cast<int>(cls.size());
                for (const Edge& edge : cls) {
                    if (deg[static_cast<std::size_t>(edge.first)] - 1 < floor_of(edge.first, m_after) ||
                        deg[static_cast<std::size_t>(edge.second)] - 1 < floor_of(edge.second, m_after)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
            }
            removed_class[static_cast<std::size_t>(ci)] = 1;
            for (const Edge& edge : cls) {
                removed_edges.insert(edge);
                --deg[static_cast<std::size_t>(edge.first)];
                --deg[static_cast<std::size_t>(edge.second)];
            }
            m -= static_cast<int>(cls.size());
        }
    }
    // Single-edge phase: shave the current maxima, floors first.
    for (bool respect_floors : {true, false}) {
        while (m > m_goal) {
            Edge best{-1, -1};
            int best_load = -1;
            for (const Edge& edge : cut.edges()) {
                if (removed_edges.count(edge)) continue;
                int du = deg[static_cast<std::size_t>(edge.first)];
                int dv = deg[static_cast<std::size_t>(edge.second)];
                if (respect_floors &&
                    (du - 1 < floor_of(edge.first, m - 1) || dv - 1 < floor_of(edge.second, m - 1)))
                    continue;
                int load = std::max(du, dv) * 1000 + std::min(du, dv);
                if (load > best_load) {
                    best_load = load;
                    best = edge;
                }
            }
            if (best.first < 0) break;
            removed_edges.insert(best);
            --deg[static_cast<std::size_t>(best.first)];
            --deg[static_cast<std::size_t>(best.second)];
            --m;
        }
        if (m <= m_goal) break;
    }

    std::vector<Edge> kept;
    for (const Edge& edge : cut.edges())
        if (!removed_edges.count(edge)) kept.push_back(edge);
    return {Graph(cut.n(), std::move(kept)),
            Graph(cut.n(), std::vector<Edge>(removed_edges.begin(), removed_edges.end()))};
}

// The m this cut would stop at when trimmed class-by-class until its max
// degree fits under target (never below half the cut).
int proportional_trim_stop(const Graph& cut, int m0, int target) {
    std::vector<int> deg(static_cast<std::size_t>(cut.n()), 0);
    for (const Edge& edge : cut.edges()) {
        ++deg[static_cast<std::size_t>(edge.first)];
        ++deg[static_cast<std::size_t>(edge.second)];
    }
    int max_deg = *std::max_element(deg.begin(), deg.end());
    if (cut.edge_count() <= m0 && max_deg <= target) return m0;
    EdgeColoring coloring = vizing_color(cut);
    std::vector<std::vector<Edge>> classes(static_cast<std::size_t>(coloring.k));
    for (int i = 0; i < cut.edge_count(); ++i)
        classes[static_cast<std::size_t>(coloring.color[static_cast<std::size_t>(i)])].push_back(
            cut.edges()[static_cast<std::size_t>(i)]);
    std::vector<int> order(classes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return classes[static_cast<std::size_t>(a)].size() > classes[static_cast<std::size_t>(b)].size();
    });
    const int m_floor = std::max(1, cut.edge_count() / 2);
    int m = cut.edge_count();
    for (int ci : order) {
        if ((m <= m0 && max_deg <= target) || m <= m_floor) break;
        const auto& cls = classes[static_cast<std::size_t>(ci)];
        if (m - static_cast<int>(cls.size()) < m_floor) continue;
        for (const Edge& edge : cls) {
            --deg[static_cast<std::size_t>(edge.first)];
            --deg[static_cast<std::size_t>(edge.second)];
        }
        m -= static_cast<int>(cls.size());
        max_deg = *std::max_element(deg.begin(), deg.end());
    }
    return std::max(1, std::min(m, m0));
}

// Vizing classes of a piece, interleaved large/small so any contiguous
// run mixes dense and sparse matchings.
std::vector<std::vector<Edge>> interleaved_classes(const Graph& g) {
    EdgeColoring coloring = vizing_color(g);
    std::vector<std::vector<Edge>> classes(static_cast<std::size_t>(coloring.k));
    for (int i = 0; i < g.edge_count(); ++i)
        classes[static_cast<std::size_t>(coloring.color[static_cast<std::size_t>(i)])].push_back(
            g.edges()[static_cast<std::size_t>(i)]);
    classes.erase(std::remove_if(classes.begin(), classes.end(),
                                 [](const std::vector<Edge>& c) { return c.empty(); }),
                  classes.end());
    std::stable_sort(classes.begin(), classes.end(),
                     [](const std::vector<Edge>& a, const std::vector<Edge>& b) {
                         return a.size() > b.size();
                     });
    std::vector<std::vector<Edge>> order;
    std::size_t lo = 0, hi = classes.size();
    while (lo < hi) {
        order.push_back(std::move(classes[lo++]));
        if (lo < hi) order.push_back(std::move(classes[--hi]));
    }
    return order;
}

// Chops a piece into `chunks` bundles with the exact size profile `quotas`
// by walking the interleaved class concatenation. A bundle's max degree is
// bounded by the number of classes its chunk touches.
std::vector<BipartiteGraph> chop_to_quotas(const BipartiteGraph& piece,
                                           const std::vector<int>& quotas) {
    auto classes = interleaved_classes(piece.graph);
    std::vector<BipartiteGraph> out;
    std::size_t cls = 0, at = 0;
    for (int quota : quotas) {
        std::vector<Edge> edges;
        while (static_cast<int>(edges.size()) < quota) {
            const auto& source = classes[cls];
            std::size_t take = std::min(source.size() - at,
                                        static_cast<std::size_t>(quota) - edges.size());
            edges.insert(edges.end(), source.begin() + static_cast<std::ptrdiff_t>(at),
                         source.begin() + static_cast<std::ptrdiff_t>(at + take));
            at += take;
            if (at == source.size()) {
                ++cls;
                at = 0;
            }
        }
        out.push_back({Graph(piece.graph.n(), std::move(edges)), piece.parts});
    }
    return out;
}

std::vector<int> balanced_quotas(int total, int chunks) {
    std::vector<int> quotas(static_cast<std::size_t>(chunks), total / chunks);
    for (int i = 0; i < total % chunks; ++i) ++quotas[static_cast<std::size_t>(i)];
    return quotas;
}

}  // namespace

namespace {

DecomposeResult decompose_attempt(const Graph& g, const PipelineParams& params,
                                  std::uint64_t attempt_seed) {
    const bool strict = params.mode == PipelineParams::Mode::strict;
    nlohmann::json trace;
    trace["n"] = g.n();
    trace["mode"] = params.mode_name();
    trace["seed"] = params.seed;
    auto reg = g.regular_degree();
    if (!reg) stage_fail_with(trace, "validate", "input graph is not regular");
    const int d = *reg;
    if (d < 1) stage_fail_with(trace, "validate", "degree must be >= 1");
    if (g.n() % 2 != 0) stage_fail_with(trace, "validate", "vertex count must be even");
    trace["d"] = d;

    const int log2d_floor = static_cast<int>(std::floor(std::log2(static_cast<double>(d))));
    if (strict) {
        if (log2d_floor - 18 < 1)
            stage_fail_with(trace, "validate", "strict mode needs d >= 2^19 so that M >= 1 and d_j >= 2^18");
        SpectralCertificate cert = certify(g, 1.0 / 12.0);
        trace["certificate"] = nlohmann::json::parse(certificate_to_json(cert));
        if (!cert.satisfied)
            stage_fail_with(trace, "validate", "spectral certificate lambda <= d/12 not satisfied");
    }

    Rng master(attempt_seed);
    BisectCaps caps{params.resample_cap};

    // Stage 1: absorber bisection {X, Y}.
    const double slack = params.initial_slack(d);
    Rng rng_initial = master.spawn();
    InitialBisectionResult initial;
    try {
        initial = initial_bisection(g, d, slack, rng_initial, caps);
    } catch (const ResampleCapError& e) {
        stage_fail_with(trace, "initial_bisection", e.what());
    }
    BipartiteGraph gxy = induced_bipartite(g, initial.parts);
    Graph gx = within_side_subgraph(g, initial.parts.left);
    Graph gy = within_side_subgraph(g, initial.parts.right);
    if (gx.edge_count() != gy.edge_count())
        stage_fail_with(trace, "initial_bisection", "e(G[X]) != e(G[Y]) despite 2e(G[X]) + e(G[X,Y]) = d|X|");
    trace["initial"] = {{"slack", slack},
                        {"stats", stats_json(initial.stats)},
                        {"cut_edges", gxy.graph.edge_count()},
                        {"side_edges", gx.edge_count()}};

    const double goodness_threshold = params.goodness_threshold(d);
    trace["goodness_threshold"] = goodness_threshold;

    Decomposition dec;
    dec.host = g;
    Graph used(g.n());
    trace["iterations"] = nlohmann::json::array();
    trace["regularization"] = {{"C", 0}, {"pairs", nlohmann::json::array()}};

    RegularizationParams rp;
    if (strict) {
        // K for the strict caps is fixed by the schedule: M iterations plus
        // at most 53 refinement pairs.
        rp = RegularizationParams::strict_params(params.rho, params.alpha, params.gamma,
                                                 std::max(1, log2d_floor - 18 + 53),
                                                 static_cast<double>(d));
    } else {
        rp.rho = params.rho;
        rp.alpha = params.alpha;
        rp.gamma = params.gamma;
        rp.K = 1;
        rp.d = d;
        rp.C = 0;
        rp.strict = false;
        rp.goodness_threshold = goodness_threshold;
        rp.used_degree_cap = 0.0;  // the leftover-regularity recount is the gate
    }
    trace["regularization"]["C"] = rp.C;

    // Tops the pair up from the absorber; practical mode may flip the
    // orientation, strict may not. Commits nothing on failure.
    auto regularize_with_orientations = [&](const BipartiteGraph& hx, const BipartiteGraph& hy,
                                            std::string& error_out) -> std::optional<RegularizeOutcome> {
        if (!strict) {
            std::vector<int> side_x = hx.parts.left;
            side_x.insert(side_x.end(), hx.parts.right.begin(), hx.parts.right.end());
            std::vector<int> side_y = hy.parts.left;
            side_y.insert(side_y.end(), hy.parts.right.begin(), hy.parts.right.end());
            auto sx = side_degree_stats(hx.graph, side_x);
            auto sy = side_degree_stats(hy.graph, side_y);
            rp.spread_cap = std::max(sx.max_degree - sx.min_degree, sy.max_degree - sy.min_degree);
        }
        try {
            return regularize_pair(gxy, hx, hy, used, rp);
        } catch (const RegularizeError& first) {
            if (strict) {
                error_out = first.what();
                return std::nullopt;
            }
            BipartiteGraph hy_flipped{hy.graph, {hy.parts.right, hy.parts.left}};
            try {
                return regularize_pair(gxy, hx, hy_flipped, used, rp);
            } catch (const RegularizeError& second) {
                error_out = std::string(first.what()) + " | flipped: " + second.what();
                return std::nullopt;
            }
        }
    };

    auto commit = [&](RegularizeOutcome&& outcome) {
        used = graph_union(used, graph_union(outcome.r_prime, outcome.r_doubleprime));
        trace["regularization"]["pairs"].push_back(
            {{"degree", *outcome.merged.degree},
             {"absorber_edges", outcome.r_prime.edge_count() + outcome.r_doubleprime.edge_count()}});
        dec.pieces.push_back(std::move(outcome.merged));
    };

    // Stage 2: iterated good bisections; each level's pair is equalized,
    // trimmed to its near-regular core, and regularized immediately so a
    // failed factor re-rolls only this level's randomness.
    const int level_retry_cap = strict ? 1 : std::max(1, params.max_attempts);
    const int planned_m = strict ? log2d_floor - 18 : params.max_iterations;
    int iterations_done = 0;
    std::string last_error;
    for (int j = 1; j <= planned_m; ++j) {
        const int delta_x = side_degree_stats(gx, initial.parts.left).max_degree;
        const int delta_y = side_degree_stats(gy, initial.parts.right).max_degree;
        if (!strict && std::max(delta_x, delta_y) <= params.stop_degree) break;
        if (gx.edge_count() == 0) break;

        const double d_prime = d / std::pow(2.0, j);  // d_{j-1}
        const double d_j = d / std::pow(2.0, j + 1);
        GoodBisectionConfig cfg;
        cfg.d = d;
        cfg.d_prime = std::max(1.0, d_prime);
        cfg.eps = 40.0 * std::pow(std::max(1.0, d_prime), -1.0 / 3.0);
        cfg.l1_multiplier = strict ? 2.0 : params.l1_multiplier;
        cfg.goodness_threshold = goodness_threshold;
        cfg.balance_multiplier = strict ? 0.0 : params.balance_multiplier;
        cfg.strict = strict;

        bool level_done = false;
        bool out_of_cuts = false;
        for (int attempt = 0; attempt < level_retry_cap && !level_done; ++attempt) {
            Rng rng_x = master.spawn();
            Rng rng_y = master.spawn();
            GoodBisectionResult bx, by;
            try {
                bx = good_bisection(gxy, true, gx, cfg, rng_x, caps);
                by = good_bisection(gxy, false, gy, cfg, rng_y, caps);
            } catch (const ResampleCapError& e) {
                last_error = e.what();
                continue;
            }
            const int m0 = std::min(bx.cut.graph.edge_count(), by.cut.graph.edge_count());
            if (m0 == 0) {
                out_of_cuts = true;  // nothing crosses; the cleanup handles the rest
                break;
            }
            int m = m0;
            Graph kept_x(g.n()), kept_y(g.n()), removed_x(g.n()), removed_y(g.n());
            if (!strict) {
                auto target_for = [&](const Graph& cut, const std::vector<int>& side) {
                    double avg = 2.0 * cut.edge_count() / static_cast<double>(side.size());
                    return static_cast<int>(std::ceil(avg) + params.trim_slack);
                };
                m = std::min(
                    proportional_trim_stop(bx.cut.graph, m0, target_for(bx.cut.graph, initial.parts.left)),
                    proportional_trim_stop(by.cut.graph, m0, target_for(by.cut.graph, initial.parts.right)));
                TrimOutcome tx = proportional_trim(bx.cut.graph, m);
                TrimOutcome ty = proportional_trim(by.cut.graph, m);
                kept_x = std::move(tx.kept);
                removed_x = std::move(tx.removed);
                kept_y = std::move(ty.kept);
                removed_y = std::move(ty.removed);
            } else {
                MEdgeSplit sx = m_edge_subgraph(bx.cut.graph, m);
                MEdgeSplit sy = m_edge_subgraph(by.cut.graph, m);
                kept_x = std::move(sx.kept);
                removed_x = std::move(sx.removed);
                kept_y = std::move(sy.kept);
                removed_y = std::move(sy.removed);
            }
            if (kept_x.edge_count() != kept_y.edge_count())
                stage_fail_with(trace, "equalize j=" + std::to_string(j), "(I2) violated");

            const auto spread_of = [](const Graph& piece, const std::vector<int>& side) {
                auto st = side_degree_stats(piece, side);
                return st.max_degree - st.min_degree;
            };
            const int spread_x = spread_of(kept_x, initial.parts.left);
            const int spread_y = spread_of(kept_y, initial.parts.right);
            const double i1_bound = 70.0 * std::pow(d_j, 2.0 / 3.0);
            if (strict && (spread_x > i1_bound + 1e-9 || spread_y > i1_bound + 1e-9))
                stage_fail_with(trace, "iterate j=" + std::to_string(j), "(I1) spread bound violated");

            BipartiteGraph hx{kept_x, bx.split};
            BipartiteGraph hy{kept_y, by.split};
            std::string error;
            auto outcome = regularize_with_orientations(hx, hy, error);
            if (!outcome) {
                last_error = error;
                if (strict) stage_fail_with(trace, "regularize_pair j=" + std::to_string(j), error);
                continue;
            }

            Graph next_gx = graph_union(graph_difference(gx, bx.cut.graph), removed_x);
            Graph next_gy = graph_union(graph_difference(gy, by.cut.graph), removed_y);
            const double eps_j = 40.0 * std::pow(std::max(1.0, d_j), -1.0 / 3.0);
            const int i4_bad =
                count_degree_window_violations(next_gx, initial.parts.left, d_j, eps_j * d_j) +
                count_degree_window_violations(next_gy, initial.parts.right, d_j, eps_j * d_j);
            if (strict && i4_bad > 0)
                stage_fail_with(trace, "iterate j=" + std::to_string(j), "(I4) degree window violated");

            commit(std::move(*outcome));
            gx = std::move(next_gx);
            gy = std::move(next_gy);
            ++iterations_done;
            level_done = true;
            trace["iterations"].push_back({{"j", j},
                                           {"d_prime", d_prime},
                                           {"m", m},
                                           {"retries", attempt},
                                           {"stats_x", stats_json(bx.stats)},
                                           {"stats_y", stats_json(by.stats)},
                                           {"piece_spread_x", spread_x},
                                           {"piece_spread_y", spread_y},
                                           {"i1_bound", i1_bound},
                                           {"i4_violations", i4_bad},
                                           {"remaining_edges", gx.edge_count()}});
        }
        if (out_of_cuts) break;
        if (!level_done)
            stage_fail_with(trace, "iterate j=" + std::to_string(j),
                            "level failed after retries; last error: " + last_error);

        long long seen = gx.edge_count() + gy.edge_count() + gxy.graph.edge_count();
        for (const auto& piece : dec.pieces) seen += static_cast<long long>(piece.edges.size());
        seen -= 2LL * used.edge_count();  // merged pieces already contain their factors
        if (seen + used.edge_count() != g.edge_count())
            stage_fail_with(trace, "iterate j=" + std::to_string(j), "edge conservation broken");
    }
    trace["M"] = iterations_done;

    // Stage 3: cleanup of the constant-degree scraps, then matched-size
    // refinement pairing and regularization; a failed factor re-rolls the
    // whole cleanup block.
    int t_count = 0;
    if (gx.edge_count() > 0) {
        const int delta_x = side_degree_stats(gx, initial.parts.left).max_degree;
        const int delta_y = side_degree_stats(gy, initial.parts.right).max_degree;
        const int delta = std::max({delta_x, delta_y, 1});
        if (strict && delta > (1 << 19)) stage_fail_with(trace, "cleanup", "leftover max degree exceeds 2^19");
        CleanupConfig ccfg;
        ccfg.goodness_threshold = goodness_threshold;
        ccfg.balance_multiplier = 0.0;
        ccfg.k = strict ? 27
                        : std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(delta)))) +
                                          params.cleanup_extra);
        const int demand_target = std::max(2, 2 * static_cast<int>(goodness_threshold));

        bool block_done = false;
        for (int attempt = 0; attempt < level_retry_cap && !block_done; ++attempt) {
            Rng rng_cx = master.spawn();
            Rng rng_cy = master.spawn();
            CleanupResult cx, cy;
            try {
                cx = cleanup_bisections(gxy, true, gx, delta, ccfg, rng_cx, caps);
                cy = cleanup_bisections(gxy, false, gy, delta, ccfg, rng_cy, caps);
            } catch (const ResampleCapError& e) {
                last_error = e.what();
                continue;
            }
            std::vector<BipartiteGraph> pieces_x, pieces_y;
            try {
                pieces_x = nonempty_pieces(decompose_by_crossings(gx, cx.splits));
                pieces_y = nonempty_pieces(decompose_by_crossings(gy, cy.splits));
            } catch (const std::runtime_error& e) {
                stage_fail_with(trace, "decompose_by_crossings", e.what());
            }
            // Wide pieces get chopped into threshold-sized quota chunks.
            auto prepared = [&](const std::vector<BipartiteGraph>& from) {
                std::vector<BipartiteGraph> out;
                for (const auto& piece : from) {
                    auto st = degree_stats(piece.graph);
                    if (st.max_degree <= demand_target) {
                        out.push_back(piece);
                        continue;
                    }
                    const int chunks =
                        std::max(1, (st.max_degree + demand_target) / demand_target);
                    for (auto& b :
                         chop_to_quotas(piece, balanced_quotas(piece.graph.edge_count(), chunks)))
                        out.push_back(std::move(b));
                }
                return out;
            };
            auto bx = prepared(pieces_x);
            auto by = prepared(pieces_y);
            auto by_edges_desc = [](const BipartiteGraph& a, const BipartiteGraph& b) {
                return a.graph.edge_count() > b.graph.edge_count();
            };
            std::stable_sort(bx.begin(), bx.end(), by_edges_desc);
            std::stable_sort(by.begin(), by.end(), by_edges_desc);
            RefinementResult refinement =
                equal_size_refine(edge_id_partition(bx), edge_id_partition(by));
            auto [qx, qy] = split_by_refinement(bx, by, refinement);

            Graph used_checkpoint = used;
            auto pieces_checkpoint = dec.pieces;
            auto pairs_checkpoint = trace["regularization"]["pairs"];
            bool all_ok = true;
            std::vector<int> order(qx.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return qx[static_cast<std::size_t>(a)].graph.edge_count() >
                       qx[static_cast<std::size_t>(b)].graph.edge_count();
            });
            for (int idx : order) {
                std::string error;
                auto outcome = regularize_with_orientations(qx[static_cast<std::size_t>(idx)],
                                                            qy[static_cast<std::size_t>(idx)], error);
                if (!outcome) {
                    last_error = error;
                    all_ok = false;
                    break;
                }
                commit(std::move(*outcome));
            }
            if (all_ok) {
                block_done = true;
                t_count = refinement.t;
                trace["cleanup"] = {{"delta", delta},
                                    {"k", ccfg.k},
                                    {"retries", attempt},
                                    {"stats_x", stats_json(cx.stats)},
                                    {"stats_y", stats_json(cy.stats)},
                                    {"pieces_x", pieces_x.size()},
                                    {"pieces_y", pieces_y.size()},
                                    {"t", t_count}};
            } else {
                used = std::move(used_checkpoint);
                dec.pieces = std::move(pieces_checkpoint);
                trace["regularization"]["pairs"] = std::move(pairs_checkpoint);
                if (strict) stage_fail_with(trace, "regularize_pair cleanup", last_error);
            }
        }
        if (!block_done)
            stage_fail_with(trace, "cleanup", "cleanup block failed after retries; last error: " + last_error);
    } else {
        trace["cleanup"] = {{"delta", 0}, {"k", 0}, {"t", 0}};
    }
    trace["t"] = t_count;

    // Stage 4: leftover absorber piece, forced regular.
    Graph leftover = graph_difference(gxy.graph, used);
    int leftover_degree = leftover.degree(0);
    for (int v = 1; v < leftover.n(); ++v)
        if (leftover.degree(v) != leftover_degree)
            stage_fail_with(trace, "leftover",
                            "absorber remainder is not regular at vertex " + std::to_string(v));
    SpanningBipartitePiece last;
    last.host_n = g.n();
    last.parts = gxy.parts;
    last.edges = leftover.edges();
    last.degree = leftover_degree;
    dec.pieces.push_back(std::move(last));
    trace["leftover_degree"] = leftover_degree;

    // Stage 5: unconditional verification.
    DecomposeResult result;
    result.report = verify(g, dec);
    trace["verification"] = result.report.to_json();
    result.decomposition = std::move(dec);
    if (!result.report.all_green()) stage_fail_with(trace, "verify", result.report.to_json().dump());
    result.trace = std::move(trace);
    return result;
}

}  // namespace

DecomposeResult decompose(const Graph& g, const PipelineParams& params) {
    Rng master(params.seed);
    nlohmann::json attempts = nlohmann::json::array();
    const int max_attempts =
        params.mode == PipelineParams::Mode::strict ? 1 : std::max(1, params.max_attempts);
    for (int attempt = 1;; ++attempt) {
        std::uint64_t attempt_seed = master.next_u64();
        try {
            DecomposeResult result = decompose_attempt(g, params, attempt_seed);
            attempts.push_back({{"attempt", attempt}, {"ok", true}});
            result.trace["attempts"] = std::move(attempts);
            return result;
        } catch (const PipelineError& e) {
            attempts.push_back({{"attempt", attempt}, {"ok", false}, {"error", e.what()}});
            // Input rejections are deterministic; random stage failures are
            // retried with a fresh derived seed.
            if (e.stage == "validate" || attempt >= max_attempts) {
                nlohmann::json trace = e.trace;
                trace["attempts"] = std::move(attempts);
                throw PipelineError(e.what(), e.stage, std::move(trace));
            }
        }
    }
}

VerificationReport verify(const Graph& g, const Decomposition& dec) {
    VerificationReport report;
    const int n = g.n();

    // Exact edge partition: multiset union of piece edges equals E(g).
    std::vector<Edge> all_edges;
    bool pieces_well_formed = true;
    for (const auto& piece : dec.pieces) {
        if (piece.host_n != n) pieces_well_formed = false;
        for (const Edge& e : piece.edges) {
            if (e.first < 0 || e.second >= n || e.first >= e.second) pieces_well_formed = false;
            all_edges.push_back(e);
        }
    }
    std::sort(all_edges.begin(), all_edges.end());
    bool duplicate = std::adjacent_find(all_edges.begin(), all_edges.end()) != all_edges.end();
    report.edge_partition_ok = pieces_well_formed && !duplicate && all_edges == g.edges();

    report.all_spanning = true;
    report.all_bipartite = true;
    report.all_regular = true;
    for (const auto& piece : dec.pieces) {
        std::vector<int> cover = piece.parts.left;
        cover.insert(cover.end(), piece.parts.right.begin(), piece.parts.right.end());
        std::sort(cover.begin(), cover.end());
        bool spanning = static_cast<int>(cover.size()) == n;
        for (int i = 0; i < static_cast<int>(cover.size()) && spanning; ++i)
            if (cover[static_cast<std::size_t>(i)] != i) spanning = false;
        if (!spanning) report.all_spanning = false;

        std::vector<char> lmask(static_cast<std::size_t>(n), 0);
        for (int v : piece.parts.left)
            if (v >= 0 && v < n) lmask[static_cast<std::size_t>(v)] = 1;
        std::vector<int> deg(static_cast<std::size_t>(n), 0);
        bool bipartite = true;
        for (const Edge& e : piece.edges) {
            if (e.first < 0 || e.second >= n) {
                bipartite = false;
                break;
            }
            if (lmask[static_cast<std::size_t>(e.first)] == lmask[static_cast<std::size_t>(e.second)])
                bipartite = false;
            ++deg[static_cast<std::size_t>(e.first)];
            ++deg[static_cast<std::size_t>(e.second)];
        }
        if (!bipartite) report.all_bipartite = false;

        int common = deg.empty() ? 0 : deg[0];
        bool regular = true;
        for (int v = 0; v < n; ++v)
            if (deg[static_cast<std::size_t>(v)] != common) regular = false;
        if (piece.degree && *piece.degree != common) regular = false;
        if (!regular) report.all_regular = false;
        report.piece_degrees.push_back(regular ? common : -1);
    }

    report.part_count = static_cast<int>(dec.pieces.size());
    auto reg = g.regular_degree();
    const int d = reg ? *reg : degree_stats(g).max_degree;
    report.bound = std::log2(std::max(1.0, static_cast<double>(d))) + 36.0;
    report.within_bound = report.part_count <= report.bound + 1e-9;
    return report;
}

OneFactorizationResult one_factorization(const Graph& g, const PipelineParams& params) {
    DecomposeResult dec = decompose(g, params);
    OneFactorizationResult result;
    result.trace = dec.trace;
    for (const auto& piece : dec.decomposition.pieces) {
        auto piece_matchings = one_factorize(piece);
        for (auto& m : piece_matchings) result.matchings.push_back(std::move(m));
    }
    const int d = *g.regular_degree();
    if (static_cast<int>(result.matchings.size()) != d)
        throw PipelineError("one_factorization: expected d matchings, got " +
                                std::to_string(result.matchings.size()),
                            "one_factorization", result.trace);
    std::vector<Edge> all;
    for (const auto& m : result.matchings) {
        if (static_cast<int>(m.size()) * 2 != g.n())
            throw PipelineError("one_factorization: matching is not perfect", "one_factorization",
                                result.trace);
        all.insert(all.end(), m.begin(), m.end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end() || all != g.edges())
        throw PipelineError("one_factorization: matchings do not partition E(G)", "one_factorization",
                            result.trace);
    result.trace["matchings"] = result.matchings.size();
    return result;
}

nlohmann::json decomposition_to_json(const DecomposeResult& result, const PipelineParams& params,
                                     bool with_timestamp) {
    const Decomposition& dec = result.decomposition;
    nlohmann::json j;
    j["n"] = dec.host.n();
    auto reg = dec.host.regular_degree();
    j["d"] = reg ? *reg : -1;
    j["mode"] = params.mode_name();
    j["seed"] = params.seed;
    j["parts"] = nlohmann::json::array();
    for (const auto& piece : dec.pieces) {
        nlohmann::json part;
        part["bipartition"] = nlohmann::json::array({piece.parts.left, piece.parts.right});
        part["degree"] = piece.degree ? nlohmann::json(*piece.degree) : nlohmann::json();
        nlohmann::json edges = nlohmann::json::array();
        for (const Edge& e : piece.edges) edges.push_back({e.first, e.second});
        part["edges"] = std::move(edges);
        j["parts"].push_back(std::move(part));
    }
    j["leftover_degree"] = dec.pieces.empty() ? 0 : dec.pieces.back().degree.value_or(-1);
    j["part_count"] = result.report.part_count;
    j["bound"] = result.report.bound;
    j["verified"] = result.report.all_green();
    if (with_timestamp) j["timestamp"] = static_cast<long long>(::time(nullptr));
    return j;
}

Decomposition decomposition_from_json(const nlohmann::json& j) {
    Decomposition dec;
    const int n = j.at("n").get<int>();
    for (const auto& part : j.at("parts")) {
        SpanningBipartitePiece piece;
        piece.host_n = n;
        piece.parts.left = part.at("bipartition").at(0).get<std::vector<int>>();
        piece.parts.right = part.at("bipartition").at(1).get<std::vector<int>>();
        if (!part.at("degree").is_null()) piece.degree = part.at("degree").get<int>();
        for (const auto& e : part.at("edges"))
            piece.edges.push_back(make_edge(e.at(0).get<int>(), e.at(1).get<int>()));
        std::sort(piece.edges.begin(), piece.edges.end());
        dec.pieces.push_back(std::move(piece));
    }
    return dec;
}

nlohmann::json matchings_to_json(const Graph& g, const OneFactorizationResult& result) {
    nlohmann::json j;
    j["n"] = g.n();
    auto reg = g.regular_degree();
    j["d"] = reg ? *reg : -1;
    j["count"] = result.matchings.size();
    j["matchings"] = nlohmann::json::array();
    for (const auto& m : result.matchings) {
        nlohmann::json jm = nlohmann::json::array();
        for (const Edge& e : m) jm.push_back({e.first, e.second});
        j["matchings"].push_back(std::move(jm));
    }
    return j;
}

}  // namespace regbip
