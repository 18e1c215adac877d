#include "regbip/graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace regbip {

Graph::Graph(int n, std::vector<Edge> edges) : n_(n) {
    if (n < 1) throw std::invalid_argument("vertex count must be >= 1");
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto [u, v] = edges[i];
        if (u >= v) throw std::invalid_argument("edge not normalized or self-loop");
        if (u < 0 || v >= n) throw std::invalid_argument("edge endpoint out of range");
        if (i > 0 && edges[i] == edges[i - 1]) throw std::invalid_argument("duplicate edge");
    }
    edges_ = std::move(edges);
    adj_.assign(static_cast<std::size_t>(n), {});
    for (auto [u, v] : edges_) {
        adj_[static_cast<std::size_t>(u)].push_back(v);
        adj_[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(int u, int v) const {
    const auto& nb = adj_[check(u)];
    check(v);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::optional<int> Graph::regular_degree() const {
    int d = degree(0);
    for (int v = 1; v < n_; ++v)
        if (degree(v) != d) return std::nullopt;
    return d;
}

void normalize_bipartition(Bipartition& bp, int n) {
    auto prep = [n](std::vector<int>& side) {
        std::sort(side.begin(), side.end());
        for (std::size_t i = 0; i < side.size(); ++i) {
            if (side[i] < 0 || side[i] >= n) throw std::invalid_argument("bipartition vertex out of range");
            if (i > 0 && side[i] == side[i - 1]) throw std::invalid_argument("repeated vertex in bipartition side");
        }
    };
    prep(bp.left);
    prep(bp.right);
    std::vector<int> both;
    std::set_intersection(bp.left.begin(), bp.left.end(), bp.right.begin(), bp.right.end(),
                          std::back_inserter(both));
    if (!both.empty()) throw std::invalid_argument("bipartition sides overlap");
}

std::vector<char> vertex_mask(int n, const std::vector<int>& s) {
    std::vector<char> mask(static_cast<std::size_t>(n), 0);
    for (int v : s) {
        if (v < 0 || v >= n) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
        mask[static_cast<std::size_t>(v)] = 1;
    }
    return mask;
}

InducedSubgraph induced_subgraph(const Graph& g, const std::vector<int>& s) {
    std::vector<int> to_host = s;
    std::sort(to_host.begin(), to_host.end());
    to_host.erase(std::unique(to_host.begin(), to_host.end()), to_host.end());
    std::vector<int> to_new(static_cast<std::size_t>(g.n()), -1);
    for (std::size_t i = 0; i < to_host.size(); ++i) {
        int v = to_host[i];
        if (v < 0 || v >= g.n()) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
        to_new[static_cast<std::size_t>(v)] = static_cast<int>(i);
    }
    if (to_host.empty()) throw std::invalid_argument("induced subgraph on empty set");
    std::vector<Edge> edges;
    for (auto [u, v] : g.edges()) {
        int nu = to_new[static_cast<std::size_t>(u)];
        int nv = to_new[static_cast<std::size_t>(v)];
        if (nu >= 0 && nv >= 0) edges.push_back(make_edge(nu, nv));
    }
    return {Graph(static_cast<int>(to_host.size()), std::move(edges)), std::move(to_host)};
}

BipartiteGraph induced_bipartite(const Graph& g, Bipartition bp) {
    normalize_bipartition(bp, g.n());
    auto lmask = vertex_mask(g.n(), bp.left);
    auto rmask = vertex_mask(g.n(), bp.right);
    std::vector<Edge> edges;
    for (auto [u, v] : g.edges()) {
        bool cross = (lmask[static_cast<std::size_t>(u)] && rmask[static_cast<std::size_t>(v)]) ||
                     (rmask[static_cast<std::size_t>(u)] && lmask[static_cast<std::size_t>(v)]);
        if (cross) edges.emplace_back(u, v);
    }
    return {Graph(g.n(), std::move(edges)), std::move(bp)};
}

DegreeStats degree_stats(const Graph& g) {
    DegreeStats st;
    st.min_degree = std::numeric_limits<int>::max();
    for (int v = 0; v < g.n(); ++v) {
        st.min_degree = std::min(st.min_degree, g.degree(v));
        st.max_degree = std::max(st.max_degree, g.degree(v));
    }
    st.edge_count = g.edge_count();
    return st;
}

DegreeStats side_degree_stats(const Graph& g, const std::vector<int>& side) {
    DegreeStats st;
    st.min_degree = side.empty() ? 0 : std::numeric_limits<int>::max();
    for (int v : side) {
        st.min_degree = std::min(st.min_degree, g.degree(v));
        st.max_degree = std::max(st.max_degree, g.degree(v));
    }
    st.edge_count = g.edge_count();
    return st;
}

long long crossing_pair_count(const Graph& g, const std::vector<int>& a, const std::vector<int>& b) {
    auto bmask = vertex_mask(g.n(), b);
    std::vector<int> aa = a;
    std::sort(aa.begin(), aa.end());
    aa.erase(std::unique(aa.begin(), aa.end()), aa.end());
    long long count = 0;
    for (int x : aa) {
        for (int y : g.neighbors(x))
            if (bmask[static_cast<std::size_t>(y)]) ++count;
    }
    return count;
}

Graph graph_union(const Graph& a, const Graph& b) {
    if (a.n() != b.n()) throw std::invalid_argument("graph_union: vertex count mismatch");
    std::vector<Edge> edges;
    std::set_union(a.edges().begin(), a.edges().end(), b.edges().begin(), b.edges().end(),
                   std::back_inserter(edges));
    return Graph(a.n(), std::move(edges));
}

Graph graph_difference(const Graph& a, const Graph& b) {
    if (a.n() != b.n()) throw std::invalid_argument("graph_difference: vertex count mismatch");
    std::vector<Edge> edges;
    std::set_difference(a.edges().begin(), a.edges().end(), b.edges().begin(), b.edges().end(),
                        std::back_inserter(edges));
    return Graph(a.n(), std::move(edges));
}

Graph read_edge_list(std::istream& in) {
    std::string line;
    long long lineno = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("edge list parse error at line " + std::to_string(lineno) + ": " + what);
    };
    ++lineno;
    if (!std::getline(in, line)) fail("missing header");
    std::istringstream head(line);
    long long n = 0, m = 0;
    if (!(head >> n >> m)) fail("expected \"n m\"");
    std::string extra;
    if (head >> extra) fail("trailing tokens in header");
    if (n < 1) fail("vertex count must be >= 1");
    if (m < 0) fail("negative edge count");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(m));
    for (long long i = 0; i < m; ++i) {
        ++lineno;
        if (!std::getline(in, line)) fail("unexpected end of file");
        std::istringstream row(line);
        long long u = 0, v = 0;
        if (!(row >> u >> v)) fail("expected \"u v\"");
        if (row >> extra) fail("trailing tokens");
        if (u < 0 || u >= n || v < 0 || v >= n) fail("endpoint out of range");
        if (u == v) fail("self-loop");
        edges.push_back(make_edge(static_cast<int>(u), static_cast<int>(v)));
    }
    try {
        return Graph(static_cast<int>(n), std::move(edges));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("edge list invalid: ") + e.what());
    }
}

void write_edge_list(std::ostream& out, const Graph& g) {
    out << g.n() << ' ' << g.edge_count() << '\n';
    for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_edge_list(in);
}

void save_edge_list(const std::string& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_edge_list(out, g);
}

}  // namespace regbip
