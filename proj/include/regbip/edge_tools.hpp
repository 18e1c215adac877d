#pragma once

#include <utility>
#include <vector>

#include "regbip/graph.hpp"

namespace regbip {

// Proper edge coloring; color[i] corresponds to g.edges()[i].
struct EdgeColoring {
    std::vector<int> color;
    int k = 0;  // number of colors used, <= max degree + 1

    int color_of(const Graph& g, Edge e) const;
};

// Misra-Gries fan/Kempe insertion; total, uses at most Delta+1 colors.
EdgeColoring vizing_color(const Graph& g);

bool coloring_is_proper(const Graph& g, const EdgeColoring& c);

// Spanning m-edge subgraph h' of h built from Vizing color classes
// (largest classes removed first, lexicographic prefix of the split class).
// Guarantees, asserted on every call:
//   spread(h') <= spread(h) + 2
//   max_degree(h \ h') <= (max_degree(h)+1)(e(h)-m)/e(h) + 1
struct MEdgeSplit {
    Graph kept;     // e == m
    Graph removed;  // h minus kept
};
MEdgeSplit m_edge_subgraph(const Graph& h, int m);

// Matched-size refinements of two partitions (Ore-style pairing step).
// Blocks are sets of integer element ids; parts_a[i] refines p, parts_b[i]
// refines q, |parts_a[i]| == |parts_b[i]|, and t <= |p| + |q| - 1.
struct RefinementResult {
    std::vector<std::vector<int>> parts_a;
    std::vector<std::vector<int>> parts_b;
    int t = 0;
};
RefinementResult equal_size_refine(const std::vector<std::vector<int>>& p,
                                   const std::vector<std::vector<int>>& q);

// Edge-id convention shared with split_by_refinement: concatenate the
// pieces' sorted edge lists in piece order; ids index that concatenation.
std::vector<std::vector<int>> edge_id_partition(const std::vector<BipartiteGraph>& pieces);

// Splits pieces along a refinement of their edge sets. Each output graph
// keeps its parent's bipartition; output lists have pairwise equal edge
// counts by construction of r.
std::pair<std::vector<BipartiteGraph>, std::vector<BipartiteGraph>> split_by_refinement(
    const std::vector<BipartiteGraph>& pieces_a, const std::vector<BipartiteGraph>& pieces_b,
    const RefinementResult& r);

}  // namespace regbip
