#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regbip {

using Vertex = int;
using Edge = std::pair<int, int>;  // normalized: first < second

inline Edge make_edge(int a, int b) {
    if (a == b) throw std::invalid_argument("self-loop " + std::to_string(a));
    return a < b ? Edge{a, b} : Edge{b, a};
}

// Simple undirected graph on vertices 0..n-1. Immutable after construction;
// adjacency lists are sorted so neighborhood intersections run in linear time.
class Graph {
public:
    Graph() = default;
    explicit Graph(int n) : n_(n), adj_(static_cast<std::size_t>(n)) {
        if (n < 1) throw std::invalid_argument("vertex count must be >= 1");
    }
    Graph(int n, std::vector<Edge> edges);

    int n() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const { return adj_[check(v)]; }
    int degree(int v) const { return static_cast<int>(adj_[check(v)].size()); }
    bool has_edge(int u, int v) const;

    // Common degree if regular, nullopt otherwise.
    std::optional<int> regular_degree() const;

private:
    std::size_t check(int v) const {
        if (v < 0 || v >= n_) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
        return static_cast<std::size_t>(v);
    }

    int n_ = 0;
    std::vector<Edge> edges_;            // sorted lexicographically
    std::vector<std::vector<int>> adj_;  // sorted neighbor lists
};

// Two disjoint vertex sets, stored sorted.
struct Bipartition {
    std::vector<int> left;
    std::vector<int> right;
};

// Validates disjointness and vertex range against n; sorts sides in place.
void normalize_bipartition(Bipartition& bp, int n);

// A graph whose edges all cross parts; vertices keep host labels.
struct BipartiteGraph {
    Graph graph;        // on the host vertex count
    Bipartition parts;  // edges of graph have one endpoint per side
};

// One member of a decomposition: spans all host vertices, edges cross the
// bipartition, and (when set) every host vertex has exactly `degree`
// incident edges.
struct SpanningBipartitePiece {
    int host_n = 0;
    Bipartition parts;  // left/right together cover 0..host_n-1
    std::vector<Edge> edges;
    std::optional<int> degree;
};

struct Decomposition {
    Graph host;
    std::vector<SpanningBipartitePiece> pieces;
};

struct InducedSubgraph {
    Graph graph;               // |s| vertices relabeled 0..|s|-1
    std::vector<int> to_host;  // new label -> host label, ascending
};

// Edges of g with both endpoints in s, relabeled to 0..|s|-1.
InducedSubgraph induced_subgraph(const Graph& g, const std::vector<int>& s);

// Edges of g with one endpoint per side of bp; host labels kept.
BipartiteGraph induced_bipartite(const Graph& g, Bipartition bp);

struct DegreeStats {
    int min_degree = 0;
    int max_degree = 0;
    int edge_count = 0;
};
DegreeStats degree_stats(const Graph& g);

// Degree extremes over a vertex subset only.
DegreeStats side_degree_stats(const Graph& g, const std::vector<int>& side);

// Ordered pairs (x,y) with xy in E(g), x in a, y in b. For a == b this
// counts each within-set edge twice: e(U,U) = 2 e(G[U]).
long long crossing_pair_count(const Graph& g, const std::vector<int>& a, const std::vector<int>& b);

// Set operations over edge sets on an identical vertex count.
Graph graph_union(const Graph& a, const Graph& b);
Graph graph_difference(const Graph& a, const Graph& b);

// Membership mask for sorted or unsorted vertex lists.
std::vector<char> vertex_mask(int n, const std::vector<int>& s);

// Edge-list text format: first line "n m", then m lines "u v" (0-based).
// Parse errors carry 1-based line numbers.
Graph read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const Graph& g);
Graph load_edge_list(const std::string& path);
void save_edge_list(const std::string& path, const Graph& g);

}  // namespace regbip
