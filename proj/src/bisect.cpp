#include "regbip/bisect.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace regbip {

namespace {

constexpr double kTol = 1e-9;

std::string kind_name(BadEventReport::Kind k) {
    switch (k) {
        case BadEventReport::Kind::degree_concentration: return "degree_concentration";
        case BadEventReport::Kind::goodness: return "goodness";
        case BadEventReport::Kind::uncrossed_edge: return "uncrossed_edge";
    }
    return "?";
}

}  // namespace

std::string BadEventReport::describe() const {
    std::ostringstream out;
    out << kind_name(kind) << " ";
    if (subject_vertex >= 0)
        out << "vertex " << subject_vertex;
    else
        out << "edge (" << subject_edge.first << "," << subject_edge.second << ")";
    out << ": observed " << observed << " outside [" << lo << ", " << hi << "]";
    return out.str();
}

std::string ResampleStats::to_json() const {
    nlohmann::json j;
    j["events_checked"] = events_checked;
    j["resamples"] = resamples;
    j["violations_final"] = violations_final;
    return j.dump();
}

BisectionPlan BisectionPlan::canonical(std::vector<int> ground) {
    std::sort(ground.begin(), ground.end());
    BisectionPlan plan;
    plan.ground_set = std::move(ground);
    const std::size_t g = plan.ground_set.size();
    for (std::size_t i = 0; i + 1 < g; i += 2)
        plan.pairs.emplace_back(plan.ground_set[i], plan.ground_set[i + 1]);
    if (g % 2 == 1) {
        plan.pairs.emplace_back(plan.ground_set[g - 1], -1);
        plan.has_dummy = true;
    }
    plan.decisions.assign(plan.pairs.size(), 0);
    return plan;
}

Bipartition BisectionPlan::realize() const {
    Bipartition bp;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [u, v] = pairs[i];
        bool first_left = decisions[i] != 0;
        (first_left ? bp.left : bp.right).push_back(u);
        if (v >= 0) (first_left ? bp.right : bp.left).push_back(v);
    }
    std::sort(bp.left.begin(), bp.left.end());
    std::sort(bp.right.begin(), bp.right.end());
    return bp;
}

namespace {

// Shared machinery for the resampling loops: one or more decision layers
// over a fixed canonical pairing, with a left-side membership mask per layer.
struct LayeredPlan {
    BisectionPlan base;
    int layers = 0;
    std::vector<std::vector<char>> decisions;  // [layer][pair]
    std::vector<char> in_ground;               // host-indexed
    std::vector<int> pair_of;                  // host vertex -> pair index (-1 outside)
    std::vector<std::vector<char>> in_left;    // [layer][host vertex]

    LayeredPlan(int host_n, std::vector<int> ground, int layer_count) {
        base = BisectionPlan::canonical(std::move(ground));
        layers = layer_count;
        decisions.assign(static_cast<std::size_t>(layers),
                         std::vector<char>(base.pairs.size(), 0));
        in_ground = vertex_mask(host_n, base.ground_set);
        pair_of.assign(static_cast<std::size_t>(host_n), -1);
        for (std::size_t i = 0; i < base.pairs.size(); ++i) {
            auto [u, v] = base.pairs[i];
            pair_of[static_cast<std::size_t>(u)] = static_cast<int>(i);
            if (v >= 0) pair_of[static_cast<std::size_t>(v)] = static_cast<int>(i);
        }
        in_left.assign(static_cast<std::size_t>(layers),
                       std::vector<char>(static_cast<std::size_t>(host_n), 0));
    }

    void apply(int layer, std::size_t pair_idx) {
        auto [u, v] = base.pairs[pair_idx];
        bool first_left = decisions[static_cast<std::size_t>(layer)][pair_idx] != 0;
        in_left[static_cast<std::size_t>(layer)][static_cast<std::size_t>(u)] = first_left ? 1 : 0;
        if (v >= 0)
            in_left[static_cast<std::size_t>(layer)][static_cast<std::size_t>(v)] = first_left ? 0 : 1;
    }

    void randomize_all(Rng& rng) {
        for (int l = 0; l < layers; ++l)
            for (std::size_t i = 0; i < base.pairs.size(); ++i) {
                decisions[static_cast<std::size_t>(l)][i] = rng.coin() ? 1 : 0;
                apply(l, i);
            }
    }

    void resample(int layer, const std::vector<int>& pair_indices, Rng& rng) {
        for (int i : pair_indices) {
            decisions[static_cast<std::size_t>(layer)][static_cast<std::size_t>(i)] = rng.coin() ? 1 : 0;
            apply(layer, static_cast<std::size_t>(i));
        }
    }

    Bipartition realize(int layer) const {
        BisectionPlan plan = base;
        plan.decisions = decisions[static_cast<std::size_t>(layer)];
        return plan.realize();
    }
};

// Pairs with exactly one endpoint in the neighborhood: the determining
// variables of a concentration/goodness event. A dummy pair counts when its
// real endpoint is in the neighborhood.
std::vector<int> determining_pairs(const LayeredPlan& plan, const std::vector<int>& neighborhood) {
    std::vector<char> in_nb(plan.in_ground.size(), 0);
    for (int v : neighborhood)
        if (plan.in_ground[static_cast<std::size_t>(v)]) in_nb[static_cast<std::size_t>(v)] = 1;
    std::vector<int> out;
    std::vector<char> seen_pair(plan.base.pairs.size(), 0);
    for (int v : neighborhood) {
        if (!plan.in_ground[static_cast<std::size_t>(v)]) continue;
        int pi = plan.pair_of[static_cast<std::size_t>(v)];
        if (seen_pair[static_cast<std::size_t>(pi)]) continue;
        seen_pair[static_cast<std::size_t>(pi)] = 1;
        auto [a, b] = plan.base.pairs[static_cast<std::size_t>(pi)];
        int inside = (in_nb[static_cast<std::size_t>(a)] ? 1 : 0) +
                     (b >= 0 && in_nb[static_cast<std::size_t>(b)] ? 1 : 0);
        if (inside == 1 || b < 0) out.push_back(pi);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int count_left(const LayeredPlan& plan, int layer, const std::vector<int>& neighborhood) {
    int c = 0;
    const auto& mask = plan.in_left[static_cast<std::size_t>(layer)];
    for (int v : neighborhood)
        if (plan.in_ground[static_cast<std::size_t>(v)] && mask[static_cast<std::size_t>(v)]) ++c;
    return c;
}

double severity(const BadEventReport& r) {
    double obs = static_cast<double>(r.observed);
    if (obs < r.lo) return r.lo - obs;
    if (obs > r.hi) return obs - r.hi;
    return 0.0;
}

[[noreturn]] void throw_cap(const char* op, std::vector<BadEventReport> survivors, ResampleStats stats) {
    stats.violations_final = static_cast<int>(survivors.size());
    BadEventReport worst;
    double worst_sev = -1.0;
    for (auto& r : survivors) {
        double s = severity(r);
        if (s > worst_sev) {
            worst_sev = s;
            worst = r;
        }
    }
    throw ResampleCapError(std::string(op) + ": resample cap exceeded; worst event: " + worst.describe(),
                           worst, stats);
}

}  // namespace

InitialBisectionResult initial_bisection(const Graph& g, int d, double slack, Rng& rng,
                                         const BisectCaps& caps) {
    if (g.n() % 2 != 0) throw std::invalid_argument("initial_bisection: odd vertex count");
    auto reg = g.regular_degree();
    if (!reg || *reg != d) throw std::invalid_argument("initial_bisection: graph is not d-regular");

    std::vector<int> ground(static_cast<std::size_t>(g.n()));
    for (int v = 0; v < g.n(); ++v) ground[static_cast<std::size_t>(v)] = v;
    LayeredPlan plan(g.n(), std::move(ground), 1);
    plan.randomize_all(rng);

    const double lo = d / 2.0 - slack - kTol;
    const double hi = d / 2.0 + slack + kTol;
    auto event = [&](int v) -> std::optional<BadEventReport> {
        int c = count_left(plan, 0, g.neighbors(v));
        if (c >= lo && c <= hi) return std::nullopt;
        return BadEventReport{BadEventReport::Kind::degree_concentration, v, {-1, -1}, c,
                              d / 2.0 - slack, d / 2.0 + slack};
    };

    ResampleStats stats;
    while (true) {
        int violated = -1;
        for (int v = 0; v < g.n(); ++v) {
            ++stats.events_checked;
            if (event(v)) {
                violated = v;
                break;
            }
        }
        if (violated < 0) break;
        if (stats.resamples >= caps.resample_cap) {
            std::vector<BadEventReport> survivors;
            for (int v = 0; v < g.n(); ++v)
                if (auto r = event(v)) survivors.push_back(*r);
            throw_cap("initial_bisection", std::move(survivors), stats);
        }
        ++stats.resamples;
        plan.resample(0, determining_pairs(plan, g.neighbors(violated)), rng);
    }
    return {plan.realize(0), stats};
}

namespace {

void check_split_inputs(const BipartiteGraph& h, bool split_left, const Graph& gs) {
    if (h.graph.n() != gs.n()) throw std::invalid_argument("side graph and host vertex counts differ");
    const auto& side = split_left ? h.parts.left : h.parts.right;
    auto mask = vertex_mask(gs.n(), side);
    for (auto [u, v] : gs.edges())
        if (!mask[static_cast<std::size_t>(u)] || !mask[static_cast<std::size_t>(v)])
            throw std::invalid_argument("side graph has an edge leaving the split side");
}

}  // namespace

GoodBisectionResult good_bisection(const BipartiteGraph& h, bool split_left, const Graph& gs,
                                   const GoodBisectionConfig& cfg, Rng& rng, const BisectCaps& caps) {
    check_split_inputs(h, split_left, gs);
    const auto& side = split_left ? h.parts.left : h.parts.right;
    const auto& other = split_left ? h.parts.right : h.parts.left;

    if (cfg.strict) {
        if (cfg.d_prime < 262144.0 || cfg.d_prime > cfg.d)
            throw std::invalid_argument("good_bisection strict: need 2^18 <= d' <= d");
        if (cfg.eps <= 0.0 || cfg.eps > 0.625)
            throw std::invalid_argument("good_bisection strict: need 0 < eps <= 5/8");
        const double hd = std::pow(cfg.d, 2.0 / 3.0);
        for (int v : side)
            if (std::abs(h.graph.degree(v) - cfg.d / 2.0) > hd + kTol)
                throw std::invalid_argument("good_bisection strict: cut degree precondition fails");
        for (int v : other)
            if (std::abs(h.graph.degree(v) - cfg.d / 2.0) > hd + kTol)
                throw std::invalid_argument("good_bisection strict: cut degree precondition fails");
        for (int x : side) {
            double dg = gs.degree(x);
            if (dg < (1.0 - cfg.eps) * cfg.d_prime - kTol || dg > (1.0 + cfg.eps) * cfg.d_prime + kTol)
                throw std::invalid_argument("good_bisection strict: gs degree precondition fails");
        }
    }

    LayeredPlan plan(h.graph.n(), side, 1);
    plan.randomize_all(rng);

    const double window = cfg.l1_multiplier / std::cbrt(cfg.d_prime);
    auto cut_event = [&](int x) -> std::optional<BadEventReport> {
        int deg = gs.degree(x);
        if (deg == 0) return std::nullopt;
        double half = deg / 2.0;
        double lo = (1.0 - window) * half, hi = (1.0 + window) * half;
        int c = count_left(plan, 0, gs.neighbors(x));
        if (c >= lo - kTol && c <= hi + kTol) return std::nullopt;
        return BadEventReport{BadEventReport::Kind::degree_concentration, x, {-1, -1}, c, lo, hi};
    };
    auto good_event = [&](int y) -> std::optional<BadEventReport> {
        int c_left = count_left(plan, 0, h.graph.neighbors(y));
        int total = 0;
        for (int w : h.graph.neighbors(y))
            if (plan.in_ground[static_cast<std::size_t>(w)]) ++total;
        int worst = std::min(c_left, total - c_left);
        double floor = cfg.goodness_threshold;
        if (cfg.balance_multiplier > 0.0)
            floor = std::max(floor, total / 2.0 - cfg.balance_multiplier * std::sqrt(static_cast<double>(total)));
        if (worst >= floor - kTol) return std::nullopt;
        return BadEventReport{BadEventReport::Kind::goodness, y, {-1, -1}, worst, floor,
                              static_cast<double>(h.graph.degree(y))};
    };

    auto side_mask = vertex_mask(h.graph.n(), side);
    auto other_mask = vertex_mask(h.graph.n(), other);
    ResampleStats stats;
    while (true) {
        int violated = -1;
        bool violated_is_cut = false;
        for (int v = 0; v < h.graph.n() && violated < 0; ++v) {
            if (side_mask[static_cast<std::size_t>(v)]) {
                ++stats.events_checked;
                if (cut_event(v)) {
                    violated = v;
                    violated_is_cut = true;
                }
            } else if (other_mask[static_cast<std::size_t>(v)]) {
                ++stats.events_checked;
                if (good_event(v)) violated = v;
            }
        }
        if (violated < 0) break;
        if (stats.resamples >= caps.resample_cap) {
            std::vector<BadEventReport> survivors;
            for (int v : side)
                if (auto r = cut_event(v)) survivors.push_back(*r);
            for (int v : other)
                if (auto r = good_event(v)) survivors.push_back(*r);
            throw_cap("good_bisection", std::move(survivors), stats);
        }
        ++stats.resamples;
        const auto& nb = violated_is_cut ? gs.neighbors(violated) : h.graph.neighbors(violated);
        plan.resample(0, determining_pairs(plan, nb), rng);
    }

    GoodBisectionResult result{plan.realize(0), {}, stats};
    result.cut = induced_bipartite(gs, result.split);
    return result;
}

CleanupResult cleanup_bisections(const BipartiteGraph& h, bool split_left, const Graph& gs,
                                 int max_degree, const CleanupConfig& cfg, Rng& rng,
                                 const BisectCaps& caps) {
    check_split_inputs(h, split_left, gs);
    if (max_degree < 1) throw std::invalid_argument("cleanup_bisections: max_degree must be >= 1");
    if (degree_stats(gs).max_degree > max_degree)
        throw std::invalid_argument("cleanup_bisections: gs exceeds the declared max degree");
    int k = cfg.k;
    if (k <= 0) k = static_cast<int>(std::ceil(std::log2(static_cast<double>(max_degree)))) + 8;

    const auto& side = split_left ? h.parts.left : h.parts.right;
    const auto& other = split_left ? h.parts.right : h.parts.left;
    LayeredPlan plan(h.graph.n(), side, k);
    plan.randomize_all(rng);

    auto crossed = [&](const Edge& e, int layer) {
        const auto& mask = plan.in_left[static_cast<std::size_t>(layer)];
        return mask[static_cast<std::size_t>(e.first)] != mask[static_cast<std::size_t>(e.second)];
    };
    auto edge_event = [&](const Edge& e) -> std::optional<BadEventReport> {
        for (int l = 0; l < k; ++l)
            if (crossed(e, l)) return std::nullopt;
        return BadEventReport{BadEventReport::Kind::uncrossed_edge, -1, e, 0, 1.0,
                              static_cast<double>(k)};
    };
    auto good_event = [&](int y, int layer) -> std::optional<BadEventReport> {
        int c_left = count_left(plan, layer, h.graph.neighbors(y));
        int total = 0;
        for (int w : h.graph.neighbors(y))
            if (plan.in_ground[static_cast<std::size_t>(w)]) ++total;
        int worst = std::min(c_left, total - c_left);
        double floor = cfg.goodness_threshold;
        if (cfg.balance_multiplier > 0.0)
            floor = std::max(floor, total / 2.0 - cfg.balance_multiplier * std::sqrt(static_cast<double>(total)));
        if (worst >= floor - kTol) return std::nullopt;
        return BadEventReport{BadEventReport::Kind::goodness, y, {-1, -1}, worst, floor,
                              static_cast<double>(h.graph.degree(y))};
    };

    ResampleStats stats;
    while (true) {
        int bad_vertex = -1, bad_layer = -1;
        std::optional<Edge> bad_edge;
        for (int y : other) {
            for (int l = 0; l < k && bad_vertex < 0; ++l) {
                ++stats.events_checked;
                if (good_event(y, l)) {
                    bad_vertex = y;
                    bad_layer = l;
                }
            }
            if (bad_vertex >= 0) break;
        }
        if (bad_vertex < 0) {
            for (const Edge& e : gs.edges()) {
                ++stats.events_checked;
                if (edge_event(e)) {
                    bad_edge = e;
                    break;
                }
            }
        }
        if (bad_vertex < 0 && !bad_edge) break;
        if (stats.resamples >= caps.resample_cap) {
            std::vector<BadEventReport> survivors;
            for (int y : other)
                for (int l = 0; l < k; ++l)
                    if (auto r = good_event(y, l)) survivors.push_back(*r);
            for (const Edge& e : gs.edges())
                if (auto r = edge_event(e)) survivors.push_back(*r);
            throw_cap("cleanup_bisections", std::move(survivors), stats);
        }
        ++stats.resamples;
        if (bad_vertex >= 0) {
            plan.resample(bad_layer, determining_pairs(plan, h.graph.neighbors(bad_vertex)), rng);
        } else {
            std::vector<int> pair_indices;
            for (int v : {bad_edge->first, bad_edge->second}) {
                int pi = plan.pair_of[static_cast<std::size_t>(v)];
                if (pi >= 0) pair_indices.push_back(pi);
            }
            std::sort(pair_indices.begin(), pair_indices.end());
            pair_indices.erase(std::unique(pair_indices.begin(), pair_indices.end()),
                               pair_indices.end());
            for (int l = 0; l < k; ++l) plan.resample(l, pair_indices, rng);
        }
    }

    CleanupResult result;
    for (int l = 0; l < k; ++l) result.splits.push_back(plan.realize(l));
    result.stats = stats;
    return result;
}

std::vector<BipartiteGraph> decompose_by_crossings(const Graph& gs,
                                                   const std::vector<Bipartition>& bps) {
    std::vector<std::vector<char>> left_masks;
    left_masks.reserve(bps.size());
    for (const auto& bp : bps) left_masks.push_back(vertex_mask(gs.n(), bp.left));
    std::vector<std::vector<Edge>> assigned(bps.size());
    for (const Edge& e : gs.edges()) {
        int home = -1;
        for (std::size_t i = 0; i < bps.size(); ++i) {
            bool lu = left_masks[i][static_cast<std::size_t>(e.first)] != 0;
            bool lv = left_masks[i][static_cast<std::size_t>(e.second)] != 0;
            bool ru = std::binary_search(bps[i].right.begin(), bps[i].right.end(), e.first);
            bool rv = std::binary_search(bps[i].right.begin(), bps[i].right.end(), e.second);
            if ((lu && rv) || (ru && lv)) {
                home = static_cast<int>(i);
                break;
            }
        }
        if (home < 0)
            throw std::runtime_error("decompose_by_crossings: edge (" + std::to_string(e.first) + "," +
                                     std::to_string(e.second) + ") crosses no bipartition");
        assigned[static_cast<std::size_t>(home)].push_back(e);
    }
    std::vector<BipartiteGraph> out;
    for (std::size_t i = 0; i < bps.size(); ++i)
        out.push_back({Graph(gs.n(), std::move(assigned[i])), bps[i]});
    return out;
}

std::vector<BadEventReport> check_goodness(const BipartiteGraph& h, bool split_left,
                                           const Bipartition& bp, double threshold) {
    const auto& side = split_left ? h.parts.left : h.parts.right;
    const auto& other = split_left ? h.parts.right : h.parts.left;
    std::vector<int> covered;
    covered.reserve(bp.left.size() + bp.right.size());
    covered.insert(covered.end(), bp.left.begin(), bp.left.end());
    covered.insert(covered.end(), bp.right.begin(), bp.right.end());
    std::sort(covered.begin(), covered.end());
    std::vector<int> side_sorted = side;
    std::sort(side_sorted.begin(), side_sorted.end());
    if (covered != side_sorted)
        throw std::invalid_argument("check_goodness: bipartition does not partition the side");

    std::vector<BadEventReport> reports;
    long long imbalance = static_cast<long long>(bp.left.size()) - static_cast<long long>(bp.right.size());
    if (imbalance < -1 || imbalance > 1) {
        reports.push_back({BadEventReport::Kind::goodness, -1, {-1, -1}, imbalance, -1.0, 1.0});
    }
    auto lmask = vertex_mask(h.graph.n(), bp.left);
    for (int y : other) {
        int c_left = 0, total = 0;
        for (int w : h.graph.neighbors(y)) {
            ++total;
            if (lmask[static_cast<std::size_t>(w)]) ++c_left;
        }
        int worst = std::min(c_left, total - c_left);
        if (worst < threshold - kTol)
            reports.push_back({BadEventReport::Kind::goodness, y, {-1, -1}, worst, threshold,
                               static_cast<double>(total)});
    }
    return reports;
}

}  // namespace regbip
