#include "regbip/factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

#include "regbip/bisect.hpp"

namespace regbip {

namespace {

struct Dinic {
    struct Arc {
        int to;
        int cap;
        int rev;
    };
    std::vector<std::vector<Arc>> adj;
    std::vector<int> level, iter;

    explicit Dinic(int nodes) : adj(static_cast<std::size_t>(nodes)) {}

    void add_arc(int a, int b, int cap) {
        adj[static_cast<std::size_t>(a)].push_back({b, cap, static_cast<int>(adj[static_cast<std::size_t>(b)].size())});
        adj[static_cast<std::size_t>(b)].push_back({a, 0, static_cast<int>(adj[static_cast<std::size_t>(a)].size()) - 1});
    }

    bool bfs(int s, int t) {
        level.assign(adj.size(), -1);
        std::queue<int> q;
        level[static_cast<std::size_t>(s)] = 0;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
                if (a.cap > 0 && level[static_cast<std::size_t>(a.to)] < 0) {
                    level[static_cast<std::size_t>(a.to)] = level[static_cast<std::size_t>(v)] + 1;
                    q.push(a.to);
                }
            }
        }
        return level[static_cast<std::size_t>(t)] >= 0;
    }

    int dfs(int v, int t, int f) {
        if (v == t) return f;
        for (int& i = iter[static_cast<std::size_t>(v)]; i < static_cast<int>(adj[static_cast<std::size_t>(v)].size()); ++i) {
            Arc& a = adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)];
            if (a.cap > 0 && level[static_cast<std::size_t>(v)] < level[static_cast<std::size_t>(a.to)]) {
                int got = dfs(a.to, t, std::min(f, a.cap));
                if (got > 0) {
                    a.cap -= got;
                    adj[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap += got;
                    return got;
                }
            }
        }
        return 0;
    }

    long long max_flow(int s, int t) {
        long long flow = 0;
        while (bfs(s, t)) {
            iter.assign(adj.size(), 0);
            while (int f = dfs(s, t, std::numeric_limits<int>::max())) flow += f;
        }
        return flow;
    }

    std::vector<char> residual_reachable(int s) const {
        std::vector<char> seen(adj.size(), 0);
        std::queue<int> q;
        seen[static_cast<std::size_t>(s)] = 1;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
                if (a.cap > 0 && !seen[static_cast<std::size_t>(a.to)]) {
                    seen[static_cast<std::size_t>(a.to)] = 1;
                    q.push(a.to);
                }
            }
        }
        return seen;
    }
};

long long ore_rhs(const DegreeSpec& f, const std::vector<int>& s, const std::vector<int>& t,
                  long long f_x) {
    return f.sum_over(s) + f.sum_over(t) - f_x;
}

// Min-cost max-flow (SPFA-based successive shortest paths). Used for the
// regularization factors so demand routing prefers plentiful vertices and
// leaves scarce ones for later pairs; the flow value still equals the max.
struct MinCostFlow {
    struct Arc {
        int to;
        int cap;
        long long cost;
        int rev;
    };
    std::vector<std::vector<Arc>> adj;

    explicit MinCostFlow(int nodes) : adj(static_cast<std::size_t>(nodes)) {}

    void add_arc(int a, int b, int cap, long long cost) {
        adj[static_cast<std::size_t>(a)].push_back(
            {b, cap, cost, static_cast<int>(adj[static_cast<std::size_t>(b)].size())});
        adj[static_cast<std::size_t>(b)].push_back(
            {a, 0, -cost, static_cast<int>(adj[static_cast<std::size_t>(a)].size()) - 1});
    }

    long long max_flow(int s, int t) {
        const long long inf = std::numeric_limits<long long>::max() / 4;
        long long flow = 0;
        while (true) {
            std::vector<long long> dist(adj.size(), inf);
            std::vector<int> prev_node(adj.size(), -1), prev_arc(adj.size(), -1);
            std::vector<char> in_queue(adj.size(), 0);
            std::queue<int> q;
            dist[static_cast<std::size_t>(s)] = 0;
            q.push(s);
            in_queue[static_cast<std::size_t>(s)] = 1;
            while (!q.empty()) {
                int v = q.front();
                q.pop();
                in_queue[static_cast<std::size_t>(v)] = 0;
                for (int i = 0; i < static_cast<int>(adj[static_cast<std::size_t>(v)].size()); ++i) {
                    const Arc& a = adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)];
                    if (a.cap > 0 && dist[static_cast<std::size_t>(v)] + a.cost < dist[static_cast<std::size_t>(a.to)]) {
                        dist[static_cast<std::size_t>(a.to)] = dist[static_cast<std::size_t>(v)] + a.cost;
                        prev_node[static_cast<std::size_t>(a.to)] = v;
                        prev_arc[static_cast<std::size_t>(a.to)] = i;
                        if (!in_queue[static_cast<std::size_t>(a.to)]) {
                            in_queue[static_cast<std::size_t>(a.to)] = 1;
                            q.push(a.to);
                        }
                    }
                }
            }
            if (dist[static_cast<std::size_t>(t)] >= inf) break;
            int push = std::numeric_limits<int>::max();
            for (int v = t; v != s; v = prev_node[static_cast<std::size_t>(v)])
                push = std::min(push, adj[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                                          [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])].cap);
            for (int v = t; v != s; v = prev_node[static_cast<std::size_t>(v)]) {
                Arc& a = adj[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                            [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])];
                a.cap -= push;
                adj[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap += push;
            }
            flow += push;
        }
        return flow;
    }

    std::vector<char> residual_reachable(int s) const {
        std::vector<char> seen(adj.size(), 0);
        std::queue<int> q;
        seen[static_cast<std::size_t>(s)] = 1;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
                if (a.cap > 0 && !seen[static_cast<std::size_t>(a.to)]) {
                    seen[static_cast<std::size_t>(a.to)] = 1;
                    q.push(a.to);
                }
            }
        }
        return seen;
    }
};

long long count_edges_between(const BipartiteGraph& h, const std::vector<int>& s,
                              const std::vector<int>& t) {
    return crossing_pair_count(h.graph, s, t);
}

// For a fixed S the minimizing T is {y : e(S,{y}) < f(y)}; scanning all S
// is a genuinely exhaustive search for an Ore violation.
std::optional<OreCertificate> exhaustive_certificate(const BipartiteGraph& h, const DegreeSpec& f) {
    const auto& x_side = h.parts.left;
    const auto& y_side = h.parts.right;
    if (x_side.size() > 20) return std::nullopt;
    const long long f_x = f.sum_over(x_side);
    auto xmask_template = std::vector<char>(static_cast<std::size_t>(h.graph.n()), 0);
    for (std::uint64_t bits = 0; bits < (1ULL << x_side.size()); ++bits) {
        std::vector<int> s;
        auto xmask = xmask_template;
        for (std::size_t i = 0; i < x_side.size(); ++i)
            if (bits & (1ULL << i)) {
                s.push_back(x_side[i]);
                xmask[static_cast<std::size_t>(x_side[i])] = 1;
            }
        std::vector<int> t;
        long long lhs = 0;
        for (int y : y_side) {
            long long into_s = 0;
            for (int w : h.graph.neighbors(y))
                if (xmask[static_cast<std::size_t>(w)]) ++into_s;
            if (into_s < f.targets[static_cast<std::size_t>(y)]) {
                t.push_back(y);
                lhs += into_s;
            }
        }
        long long rhs = ore_rhs(f, s, t, f_x);
        if (lhs < rhs) return OreCertificate{std::move(s), std::move(t), lhs, rhs};
    }
    return std::nullopt;
}

}  // namespace

namespace {

// Exact-degree factor via min-cost max-flow with per-vertex scarcity
// costs; shares the certificate derivation with f_factor.
FactorResult f_factor_scarcity_aware(const BipartiteGraph& h, const DegreeSpec& f,
                                     const std::vector<long long>& vertex_cost) {
    const auto& x_side = h.parts.left;
    const auto& y_side = h.parts.right;
    const long long f_x = f.sum_over(x_side);
    if (f_x != f.sum_over(y_side))
        throw std::invalid_argument("f_factor: side sums differ, f(X) != f(Y)");

    const int nx = static_cast<int>(x_side.size());
    const int ny = static_cast<int>(y_side.size());
    const int source = 0, sink = 1 + nx + ny;
    std::vector<int> x_index(static_cast<std::size_t>(h.graph.n()), -1);
    std::vector<int> y_index(static_cast<std::size_t>(h.graph.n()), -1);
    for (int i = 0; i < nx; ++i) x_index[static_cast<std::size_t>(x_side[static_cast<std::size_t>(i)])] = i;
    for (int i = 0; i < ny; ++i) y_index[static_cast<std::size_t>(y_side[static_cast<std::size_t>(i)])] = i;

    MinCostFlow net(2 + nx + ny);
    for (int i = 0; i < nx; ++i)
        net.add_arc(source, 1 + i, f.targets[static_cast<std::size_t>(x_side[static_cast<std::size_t>(i)])], 0);
    for (int i = 0; i < ny; ++i)
        net.add_arc(1 + nx + i, sink, f.targets[static_cast<std::size_t>(y_side[static_cast<std::size_t>(i)])], 0);
    struct MiddleArc {
        Edge e;
        int from_node;
        int arc_idx;
    };
    std::vector<MiddleArc> middle;
    for (const Edge& e : h.graph.edges()) {
        int xi = x_index[static_cast<std::size_t>(e.first)];
        int yi = y_index[static_cast<std::size_t>(e.second)];
        int xv = e.first, yv = e.second;
        if (xi < 0) {
            xi = x_index[static_cast<std::size_t>(e.second)];
            yi = y_index[static_cast<std::size_t>(e.first)];
            xv = e.second;
            yv = e.first;
        }
        if (xi < 0 || yi < 0) throw std::invalid_argument("f_factor: edge does not cross the bipartition");
        int from = 1 + xi;
        long long cost = vertex_cost[static_cast<std::size_t>(xv)] + vertex_cost[static_cast<std::size_t>(yv)];
        middle.push_back({make_edge(xv, yv), from,
                          static_cast<int>(net.adj[static_cast<std::size_t>(from)].size())});
        net.add_arc(from, 1 + nx + yi, 1, cost);
    }

    long long flow = net.max_flow(source, sink);
    if (flow == f_x) {
        std::vector<Edge> chosen;
        for (const MiddleArc& ma : middle)
            if (net.adj[static_cast<std::size_t>(ma.from_node)][static_cast<std::size_t>(ma.arc_idx)].cap == 0)
                chosen.push_back(ma.e);
        return Graph(h.graph.n(), std::move(chosen));
    }
    auto reach = net.residual_reachable(source);
    OreCertificate cert;
    for (int i = 0; i < nx; ++i)
        if (reach[static_cast<std::size_t>(1 + i)]) cert.s.push_back(x_side[static_cast<std::size_t>(i)]);
    for (int i = 0; i < ny; ++i)
        if (!reach[static_cast<std::size_t>(1 + nx + i)]) cert.t_set.push_back(y_side[static_cast<std::size_t>(i)]);
    cert.lhs = count_edges_between(h, cert.s, cert.t_set);
    cert.rhs = ore_rhs(f, cert.s, cert.t_set, f_x);
    if (cert.lhs < cert.rhs) return cert;
    if (auto fb = exhaustive_certificate(h, f)) return *fb;
    throw std::logic_error("f_factor: flow below demand but no certificate found");
}

}  // namespace

std::string OreCertificate::to_json() const {
    nlohmann::json j;
    j["S"] = s;
    j["T"] = t_set;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    return j.dump();
}

FactorResult f_factor(const BipartiteGraph& h, const DegreeSpec& f) {
    const auto& x_side = h.parts.left;
    const auto& y_side = h.parts.right;
    if (f.targets.size() != static_cast<std::size_t>(h.graph.n()))
        throw std::invalid_argument("f_factor: target vector size mismatch");
    for (int v = 0; v < h.graph.n(); ++v)
        if (f.targets[static_cast<std::size_t>(v)] < 0)
            throw std::invalid_argument("f_factor: negative target");
    {
        auto lmask = vertex_mask(h.graph.n(), x_side);
        auto rmask = vertex_mask(h.graph.n(), y_side);
        for (int v = 0; v < h.graph.n(); ++v)
            if (!lmask[static_cast<std::size_t>(v)] && !rmask[static_cast<std::size_t>(v)] &&
                f.targets[static_cast<std::size_t>(v)] != 0)
                throw std::invalid_argument("f_factor: nonzero target outside the bipartite vertex set");
    }
    const long long f_x = f.sum_over(x_side);
    if (f_x != f.sum_over(y_side))
        throw std::invalid_argument("f_factor: side sums differ, f(X) != f(Y)");

    // Node layout: 0 = source, X block, Y block, sink.
    const int nx = static_cast<int>(x_side.size());
    const int ny = static_cast<int>(y_side.size());
    const int source = 0, sink = 1 + nx + ny;
    std::vector<int> x_index(static_cast<std::size_t>(h.graph.n()), -1);
    std::vector<int> y_index(static_cast<std::size_t>(h.graph.n()), -1);
    for (int i = 0; i < nx; ++i) x_index[static_cast<std::size_t>(x_side[static_cast<std::size_t>(i)])] = i;
    for (int i = 0; i < ny; ++i) y_index[static_cast<std::size_t>(y_side[static_cast<std::size_t>(i)])] = i;

    Dinic net(2 + nx + ny);
    for (int i = 0; i < nx; ++i)
        net.add_arc(source, 1 + i, f.targets[static_cast<std::size_t>(x_side[static_cast<std::size_t>(i)])]);
    for (int i = 0; i < ny; ++i)
        net.add_arc(1 + nx + i, sink, f.targets[static_cast<std::size_t>(y_side[static_cast<std::size_t>(i)])]);
    struct MiddleArc {
        Edge e;
        int from_node;
        int arc_idx;
    };
    std::vector<MiddleArc> middle;
    for (const Edge& e : h.graph.edges()) {
        int xi = x_index[static_cast<std::size_t>(e.first)];
        int yi = y_index[static_cast<std::size_t>(e.second)];
        int xv = e.first, yv = e.second;
        if (xi < 0) {
            xi = x_index[static_cast<std::size_t>(e.second)];
            yi = y_index[static_cast<std::size_t>(e.first)];
            xv = e.second;
            yv = e.first;
        }
        if (xi < 0 || yi < 0) throw std::invalid_argument("f_factor: edge does not cross the bipartition");
        int from = 1 + xi;
        middle.push_back({make_edge(xv, yv), from, static_cast<int>(net.adj[static_cast<std::size_t>(from)].size())});
        net.add_arc(from, 1 + nx + yi, 1);
    }

    long long flow = net.max_flow(source, sink);
    if (flow == f_x) {
        std::vector<Edge> chosen;
        for (const MiddleArc& ma : middle)
            if (net.adj[static_cast<std::size_t>(ma.from_node)][static_cast<std::size_t>(ma.arc_idx)].cap == 0)
                chosen.push_back(ma.e);
        Graph factor(h.graph.n(), std::move(chosen));
        for (int v : x_side)
            if (factor.degree(v) != f.targets[static_cast<std::size_t>(v)])
                throw std::logic_error("f_factor: degree mismatch after flow");
        for (int v : y_side)
            if (factor.degree(v) != f.targets[static_cast<std::size_t>(v)])
                throw std::logic_error("f_factor: degree mismatch after flow");
        return factor;
    }

    // Min cut to Ore violation: with R the residual set reachable from the
    // source, S = X ∩ R and T = Y \ R give e(S,T) < f(S) + f(T) - f(X).
    auto reach = net.residual_reachable(source);
    OreCertificate cert;
    for (int i = 0; i < nx; ++i)
        if (reach[static_cast<std::size_t>(1 + i)]) cert.s.push_back(x_side[static_cast<std::size_t>(i)]);
    for (int i = 0; i < ny; ++i)
        if (!reach[static_cast<std::size_t>(1 + nx + i)]) cert.t_set.push_back(y_side[static_cast<std::size_t>(i)]);
    cert.lhs = count_edges_between(h, cert.s, cert.t_set);
    cert.rhs = ore_rhs(f, cert.s, cert.t_set, f_x);
    if (cert.lhs < cert.rhs) return cert;

    if (auto fb = exhaustive_certificate(h, f)) return *fb;
    throw std::logic_error("f_factor: flow below demand but no certificate found");
}

std::string ProbeReport::to_json() const {
    nlohmann::json j;
    j["trials"] = trials;
    j["successes"] = successes;
    j["vacuous"] = vacuous;
    if (first_failure)
        j["first_failure"] = nlohmann::json::parse(first_failure->to_json());
    else
        j["first_failure"] = nullptr;
    return j.dump(2);
}

ProbeReport probe_robust_matchability(const BipartiteGraph& h, double d, double rho, double alpha,
                                      double gamma, int trials, Rng& rng) {
    if (h.parts.left.size() != h.parts.right.size())
        throw std::invalid_argument("probe_robust_matchability: sides must be balanced");
    ProbeReport report;
    const int rho_cap = static_cast<int>(std::floor(rho * d + 1e-9));
    const int max_deg = degree_stats(h.graph).max_degree;
    const double keep_p = max_deg > 0 ? std::min(1.0, rho * d / max_deg) : 0.0;

    for (int trial = 0; trial < trials; ++trial) {
        ++report.trials;
        // Random subsample, then trim back to the degree cap.
        std::vector<Edge> f_edges;
        if (rho_cap > 0) {
            for (const Edge& e : h.graph.edges())
                if (rng.unit_real() <= keep_p) f_edges.push_back(e);
        }
        Graph f_graph(h.graph.n(), f_edges);
        while (true) {
            int offender = -1;
            for (int v = 0; v < f_graph.n(); ++v)
                if (f_graph.degree(v) > rho_cap) {
                    offender = v;
                    break;
                }
            if (offender < 0) break;
            int w = f_graph.neighbors(offender).back();
            f_graph = graph_difference(f_graph, Graph(f_graph.n(), {make_edge(offender, w)}));
        }

        // Demand range [(1-gamma) a' d, a' d] must hold an integer.
        int lo = 0, hi = -1;
        for (int attempt = 0; attempt < 16; ++attempt) {
            double a_prime = alpha * rng.unit_real();
            lo = static_cast<int>(std::ceil((1.0 - gamma) * a_prime * d - 1e-9));
            hi = static_cast<int>(std::floor(a_prime * d + 1e-9));
            if (lo <= hi) break;
        }
        if (lo > hi) {
            ++report.vacuous;
            ++report.successes;
            continue;
        }

        DegreeSpec f;
        f.targets.assign(static_cast<std::size_t>(h.graph.n()), 0);
        for (int v : h.parts.left)
            f.targets[static_cast<std::size_t>(v)] = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
        for (int v : h.parts.right)
            f.targets[static_cast<std::size_t>(v)] = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
        // Balance by decrementing the largest values on the heavier side.
        while (true) {
            long long fx = f.sum_over(h.parts.left), fy = f.sum_over(h.parts.right);
            if (fx == fy) break;
            const auto& heavy = fx > fy ? h.parts.left : h.parts.right;
            int best = -1;
            for (int v : heavy) {
                int fv = f.targets[static_cast<std::size_t>(v)];
                if (fv > lo && (best < 0 || fv > f.targets[static_cast<std::size_t>(best)])) best = v;
            }
            if (best < 0) throw std::logic_error("probe: cannot balance demand sums");
            --f.targets[static_cast<std::size_t>(best)];
        }

        BipartiteGraph depleted{graph_difference(h.graph, f_graph), h.parts};
        auto result = f_factor(depleted, f);
        if (std::holds_alternative<Graph>(result)) {
            ++report.successes;
        } else if (!report.first_failure) {
            report.first_failure = std::get<OreCertificate>(result);
        }
    }
    return report;
}

RegularizationParams RegularizationParams::strict_params(double rho, double alpha, double gamma,
                                                         int K, double d) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (rho / alpha > K + 1e-9 || K > gamma * rho * d / 2.0 + 1e-9)
        throw std::invalid_argument("strict regularization needs rho/alpha <= K <= gamma rho d / 2");
    if (rho + alpha > 0.01 + 1e-12 || gamma > 1.0 / 30.0 + 1e-12)
        throw std::invalid_argument("strict regularization needs rho + alpha <= 1/100, gamma <= 1/30");
    RegularizationParams p;
    p.rho = rho;
    p.alpha = alpha;
    p.gamma = gamma;
    p.K = K;
    p.d = d;
    p.C = static_cast<int>(std::ceil((1.0 - gamma) * rho * d / K - 1e-9));
    p.strict = true;
    p.spread_cap = gamma * rho * d / (4.0 * K);
    p.goodness_threshold = d / 5.0;
    p.used_degree_cap = rho * d;
    return p;
}

RegularizeOutcome regularize_pair(const BipartiteGraph& gxy, const BipartiteGraph& hx,
                                  const BipartiteGraph& hy, const Graph& used,
                                  const RegularizationParams& params) {
    const int n = gxy.graph.n();
    if (hx.graph.n() != n || hy.graph.n() != n || used.n() != n)
        throw std::invalid_argument("regularize_pair: vertex count mismatch");

    if (hx.graph.edge_count() != hy.graph.edge_count())
        throw RegularizeError("regularize_pair: (A2) violated, e(hx)=" +
                              std::to_string(hx.graph.edge_count()) +
                              " != e(hy)=" + std::to_string(hy.graph.edge_count()));

    // Side vertex sets of the two pieces.
    std::vector<int> x_all = hx.parts.left;
    x_all.insert(x_all.end(), hx.parts.right.begin(), hx.parts.right.end());
    std::sort(x_all.begin(), x_all.end());
    std::vector<int> y_all = hy.parts.left;
    y_all.insert(y_all.end(), hy.parts.right.begin(), hy.parts.right.end());
    std::sort(y_all.begin(), y_all.end());

    const auto stats_x = side_degree_stats(hx.graph, x_all);
    const auto stats_y = side_degree_stats(hy.graph, y_all);
    const int spread = std::max(stats_x.max_degree - stats_x.min_degree,
                                stats_y.max_degree - stats_y.min_degree);
    if (spread > params.spread_cap + 1e-9)
        throw RegularizeError("regularize_pair: (A1) violated, degree spread " + std::to_string(spread) +
                              " exceeds cap " + std::to_string(params.spread_cap));

    bool hx_on_left;
    if (x_all == gxy.parts.left && y_all == gxy.parts.right) {
        hx_on_left = true;
    } else if (x_all == gxy.parts.right && y_all == gxy.parts.left) {
        hx_on_left = false;
    } else {
        throw std::invalid_argument("regularize_pair: pieces do not cover the absorber sides");
    }
    if (params.goodness_threshold > 0.0) {
        if (!check_goodness(gxy, hx_on_left, hx.parts, params.goodness_threshold).empty())
            throw RegularizeError("regularize_pair: (A3) violated for the X-side piece");
        if (!check_goodness(gxy, !hx_on_left, hy.parts, params.goodness_threshold).empty())
            throw RegularizeError("regularize_pair: (A3) violated for the Y-side piece");
    }

    if (params.used_degree_cap > 0.0) {
        int used_max = degree_stats(used).max_degree;
        if (used_max > params.used_degree_cap + 1e-9)
            throw RegularizeError("regularize_pair: consumed absorber degree " + std::to_string(used_max) +
                                  " exceeds cap " + std::to_string(params.used_degree_cap));
    }

    // Relabel so primed sides match in size; forced by near-balance.
    Bipartition hy_parts = hy.parts;
    if (hx.parts.left.size() != hy_parts.left.size()) std::swap(hy_parts.left, hy_parts.right);
    if (hx.parts.left.size() != hy_parts.left.size() || hx.parts.right.size() != hy_parts.right.size())
        throw RegularizeError("regularize_pair: side sizes cannot be matched by relabeling");

    const int delta_h = std::max(stats_x.max_degree, stats_y.max_degree);
    const int piece_degree = params.C + delta_h;

    auto demand_for = [&](const std::vector<int>& xs, const std::vector<int>& ys,
                          const Graph& gx_piece, const Graph& gy_piece) {
        DegreeSpec f;
        f.targets.assign(static_cast<std::size_t>(n), 0);
        for (int v : xs) f.targets[static_cast<std::size_t>(v)] = params.C + delta_h - gx_piece.degree(v);
        for (int v : ys) f.targets[static_cast<std::size_t>(v)] = params.C + delta_h - gy_piece.degree(v);
        return f;
    };

    DegreeSpec f_prime = demand_for(hx.parts.left, hy_parts.left, hx.graph, hy.graph);
    DegreeSpec f_dprime = demand_for(hx.parts.right, hy_parts.right, hx.graph, hy.graph);
    if (params.strict) {
        double lo = (1.0 - params.gamma) * params.rho * params.d / params.K;
        double hi = params.rho * params.d / params.K;
        for (const auto& f : {f_prime, f_dprime})
            for (int v = 0; v < n; ++v) {
                int fv = f.targets[static_cast<std::size_t>(v)];
                if (fv != 0 && (fv < lo - 1e-9 || fv > hi + 1e-9))
                    throw RegularizeError("regularize_pair: strict demand range violated");
            }
    }

    Graph avail = graph_difference(gxy.graph, used);
    // Route demand through plentiful vertices first so scarce remaining
    // degrees survive for later pairs.
    std::vector<long long> scarcity(static_cast<std::size_t>(n), 0);
    {
        int max_remaining = 0;
        for (int v = 0; v < n; ++v) max_remaining = std::max(max_remaining, avail.degree(v));
        for (int v = 0; v < n; ++v)
            scarcity[static_cast<std::size_t>(v)] = max_remaining - avail.degree(v);
    }
    auto solve = [&](const std::vector<int>& xs, const std::vector<int>& ys, const DegreeSpec& f,
                     const char* which) {
        BipartiteGraph sub = induced_bipartite(avail, Bipartition{xs, ys});
        FactorResult res = f_factor_scarcity_aware(sub, f, scarcity);
        if (std::holds_alternative<OreCertificate>(res)) {
            auto cert = std::get<OreCertificate>(res);
            std::string detail;
            for (std::size_t i = 0; i < cert.s.size() && i < 6; ++i) {
                int v = cert.s[i];
                detail += " v" + std::to_string(v) + "(f=" + std::to_string(f.targets[static_cast<std::size_t>(v)]) +
                          ",avail=" + std::to_string(sub.graph.degree(v)) + ")";
            }
            throw RegularizeError(std::string("regularize_pair: no ") + which +
                                      "-factor in the remaining absorber: " + cert.to_json() +
                                      "; piece degree " + std::to_string(params.C + delta_h) +
                                      ", sides " + std::to_string(xs.size()) + "x" + std::to_string(ys.size()) +
                                      ";" + detail,
                                  cert);
        }
        return std::get<Graph>(res);
    };

    RegularizeOutcome out{solve(hx.parts.left, hy_parts.left, f_prime, "f'"),
                          solve(hx.parts.right, hy_parts.right, f_dprime, "f''"),
                          {}};

    Graph joint = graph_union(out.r_prime, out.r_doubleprime);
    const int joint_max = degree_stats(joint).max_degree;
    const double per_step_cap =
        params.strict ? params.rho * params.d / params.K
                      : static_cast<double>(params.C + delta_h - std::min(stats_x.min_degree, stats_y.min_degree));
    if (joint_max > per_step_cap + 1e-9)
        throw std::logic_error("regularize_pair: factor degree exceeds the per-step cap");

    Graph merged_graph = graph_union(graph_union(hx.graph, hy.graph), joint);
    SpanningBipartitePiece piece;
    piece.host_n = n;
    piece.parts.left = hx.parts.left;
    piece.parts.left.insert(piece.parts.left.end(), hy_parts.right.begin(), hy_parts.right.end());
    std::sort(piece.parts.left.begin(), piece.parts.left.end());
    piece.parts.right = hx.parts.right;
    piece.parts.right.insert(piece.parts.right.end(), hy_parts.left.begin(), hy_parts.left.end());
    std::sort(piece.parts.right.begin(), piece.parts.right.end());
    piece.edges = merged_graph.edges();
    piece.degree = piece_degree;
    out.merged = std::move(piece);

    // Recount: the merged piece must be exactly piece_degree-regular on X ∪ Y.
    for (int v : x_all)
        if (merged_graph.degree(v) != piece_degree)
            throw std::logic_error("regularize_pair: merged piece is not regular at vertex " + std::to_string(v));
    for (int v : y_all)
        if (merged_graph.degree(v) != piece_degree)
            throw std::logic_error("regularize_pair: merged piece is not regular at vertex " + std::to_string(v));
    return out;
}

namespace {

// Hopcroft-Karp on an explicit bipartite edge list.
struct MatchingSolver {
    int nl, nr;
    std::vector<std::vector<int>> adj;  // left index -> right indices
    std::vector<int> match_l, match_r, dist;

    MatchingSolver(int left, int right) : nl(left), nr(right), adj(static_cast<std::size_t>(left)) {}

    bool bfs() {
        std::queue<int> q;
        dist.assign(static_cast<std::size_t>(nl), -1);
        for (int u = 0; u < nl; ++u)
            if (match_l[static_cast<std::size_t>(u)] < 0) {
                dist[static_cast<std::size_t>(u)] = 0;
                q.push(u);
            }
        bool found = false;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                int w = match_r[static_cast<std::size_t>(v)];
                if (w < 0) {
                    found = true;
                } else if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
                    q.push(w);
                }
            }
        }
        return found;
    }

    bool dfs(int u) {
        for (int v : adj[static_cast<std::size_t>(u)]) {
            int w = match_r[static_cast<std::size_t>(v)];
            if (w < 0 || (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(u)] + 1 && dfs(w))) {
                match_l[static_cast<std::size_t>(u)] = v;
                match_r[static_cast<std::size_t>(v)] = u;
                return true;
            }
        }
        dist[static_cast<std::size_t>(u)] = -1;
        return false;
    }

    int solve() {
        match_l.assign(static_cast<std::size_t>(nl), -1);
        match_r.assign(static_cast<std::size_t>(nr), -1);
        int matched = 0;
        while (bfs()) {
            for (int u = 0; u < nl; ++u)
                if (match_l[static_cast<std::size_t>(u)] < 0 && dfs(u)) ++matched;
        }
        return matched;
    }
};

}  // namespace

std::vector<std::vector<Edge>> one_factorize(const SpanningBipartitePiece& piece) {
    const int n = piece.host_n;
    Graph current(n, piece.edges);
    if (!piece.degree) throw std::invalid_argument("one_factorize: piece has no declared degree");
    const int r = *piece.degree;
    for (int v : piece.parts.left)
        if (current.degree(v) != r) throw std::invalid_argument("one_factorize: piece is not regular");
    for (int v : piece.parts.right)
        if (current.degree(v) != r) throw std::invalid_argument("one_factorize: piece is not regular");
    if (r == 0) return {};
    if (piece.parts.left.size() != piece.parts.right.size())
        throw std::invalid_argument("one_factorize: sides are unbalanced");

    std::vector<int> lidx(static_cast<std::size_t>(n), -1), ridx(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < piece.parts.left.size(); ++i)
        lidx[static_cast<std::size_t>(piece.parts.left[i])] = static_cast<int>(i);
    for (std::size_t i = 0; i < piece.parts.right.size(); ++i)
        ridx[static_cast<std::size_t>(piece.parts.right[i])] = static_cast<int>(i);

    std::vector<std::vector<Edge>> matchings;
    for (int round = 0; round < r; ++round) {
        MatchingSolver solver(static_cast<int>(piece.parts.left.size()),
                              static_cast<int>(piece.parts.right.size()));
        for (const Edge& e : current.edges()) {
            int lu = lidx[static_cast<std::size_t>(e.first)];
            int rv = ridx[static_cast<std::size_t>(e.second)];
            if (lu < 0) {
                lu = lidx[static_cast<std::size_t>(e.second)];
                rv = ridx[static_cast<std::size_t>(e.first)];
            }
            solver.adj[static_cast<std::size_t>(lu)].push_back(rv);
        }
        int matched = solver.solve();
        if (matched != static_cast<int>(piece.parts.left.size()))
            throw std::logic_error("one_factorize: maximum matching is not perfect");
        std::vector<Edge> matching;
        for (std::size_t u = 0; u < piece.parts.left.size(); ++u)
            matching.push_back(make_edge(piece.parts.left[u],
                                         piece.parts.right[static_cast<std::size_t>(solver.match_l[u])]));
        std::sort(matching.begin(), matching.end());
        current = graph_difference(current, Graph(n, matching));
        matchings.push_back(std::move(matching));
    }
    if (current.edge_count() != 0) throw std::logic_error("one_factorize: leftover edges after extraction");
    return matchings;
}

}  // namespace regbip
