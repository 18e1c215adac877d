#include "regbip/edge_tools.hpp"

#include <algorithm>
#include <numeric>

namespace regbip {

namespace {

// Incidence view used by the coloring: per vertex, (neighbor, edge id).
struct Incidence {
    std::vector<std::vector<std::pair<int, int>>> inc;

    explicit Incidence(const Graph& g) : inc(static_cast<std::size_t>(g.n())) {
        for (int i = 0; i < g.edge_count(); ++i) {
            auto [u, v] = g.edges()[static_cast<std::size_t>(i)];
            inc[static_cast<std::size_t>(u)].emplace_back(v, i);
            inc[static_cast<std::size_t>(v)].emplace_back(u, i);
        }
    }

    int edge_id(int u, int v) const {
        for (auto [w, id] : inc[static_cast<std::size_t>(u)])
            if (w == v) return id;
        throw std::logic_error("edge lookup failed");
    }
};

constexpr int kUncolored = -1;

bool is_free(const Incidence& inc, const std::vector<int>& color, int u, int c) {
    if (c == kUncolored) return false;
    for (auto [w, id] : inc.inc[static_cast<std::size_t>(u)])
        if (color[static_cast<std::size_t>(id)] == c) return false;
    return true;
}

int find_free_color(const Incidence& inc, const std::vector<int>& color, int u) {
    int c = 0;
    while (!is_free(inc, color, u, c)) ++c;
    return c;
}

std::vector<int> maximal_fan(const Incidence& inc, const std::vector<int>& color, int x, int y) {
    std::vector<int> fan{y};
    bool extended;
    do {
        extended = false;
        for (auto [v, id] : inc.inc[static_cast<std::size_t>(x)]) {
            if (is_free(inc, color, fan.back(), color[static_cast<std::size_t>(id)]) &&
                std::find(fan.begin(), fan.end(), v) == fan.end()) {
                fan.push_back(v);
                extended = true;
            }
        }
    } while (extended);
    return fan;
}

// Walk the alternating c/d path from x (first edge colored d) and swap colors.
void invert_cd_path(const Incidence& inc, std::vector<int>& color, int x, int c, int d) {
    int prev_edge = -1;
    while (true) {
        int next_edge = -1, next_vertex = -1;
        for (auto [v, id] : inc.inc[static_cast<std::size_t>(x)]) {
            if (id != prev_edge && color[static_cast<std::size_t>(id)] == d) {
                next_edge = id;
                next_vertex = v;
                break;
            }
        }
        if (next_edge == -1) return;
        color[static_cast<std::size_t>(next_edge)] = c;
        std::swap(c, d);
        prev_edge = next_edge;
        x = next_vertex;
    }
}

void rotate_fan(const Incidence& inc, std::vector<int>& color, int x,
                std::vector<int>::const_iterator begin, std::vector<int>::const_iterator end) {
    if (begin == end) return;
    int previous = inc.edge_id(x, *begin);
    for (++begin; begin != end; ++begin) {
        int current = inc.edge_id(x, *begin);
        color[static_cast<std::size_t>(previous)] = color[static_cast<std::size_t>(current)];
        previous = current;
    }
}

int color_one_edge(const Incidence& inc, std::vector<int>& color, int x, int y) {
    std::vector<int> fan = maximal_fan(inc, color, x, y);
    int c = find_free_color(inc, color, x);
    int d = find_free_color(inc, color, fan.back());
    invert_cd_path(inc, color, x, c, d);
    auto w = std::find_if(fan.begin(), fan.end(),
                          [&](int u) { return is_free(inc, color, u, d); });
    rotate_fan(inc, color, x, fan.begin(), w + 1);
    color[static_cast<std::size_t>(inc.edge_id(x, *w))] = d;
    return std::max(c, d);
}

}  // namespace

int EdgeColoring::color_of(const Graph& g, Edge e) const {
    auto it = std::lower_bound(g.edges().begin(), g.edges().end(), e);
    if (it == g.edges().end() || *it != e) throw std::invalid_argument("edge not in graph");
    return color[static_cast<std::size_t>(it - g.edges().begin())];
}

EdgeColoring vizing_color(const Graph& g) {
    Incidence inc(g);
    EdgeColoring result;
    result.color.assign(static_cast<std::size_t>(g.edge_count()), kUncolored);
    int colors = 0;
    for (int i = 0; i < g.edge_count(); ++i) {
        auto [u, v] = g.edges()[static_cast<std::size_t>(i)];
        colors = std::max(colors, color_one_edge(inc, result.color, u, v) + 1);
    }
    result.k = colors;
    int max_deg = degree_stats(g).max_degree;
    if (g.edge_count() > 0 && result.k > max_deg + 1)
        throw std::logic_error("vizing_color exceeded max degree + 1 colors");
    return result;
}

bool coloring_is_proper(const Graph& g, const EdgeColoring& c) {
    std::vector<std::vector<int>> seen(static_cast<std::size_t>(g.n()));
    for (int i = 0; i < g.edge_count(); ++i) {
        int col = c.color[static_cast<std::size_t>(i)];
        if (col < 0 || col >= c.k) return false;
        auto [u, v] = g.edges()[static_cast<std::size_t>(i)];
        for (int w : {u, v}) {
            auto& s = seen[static_cast<std::size_t>(w)];
            if (std::find(s.begin(), s.end(), col) != s.end()) return false;
            s.push_back(col);
        }
    }
    return true;
}

MEdgeSplit m_edge_subgraph(const Graph& h, int m) {
    if (m < 1 || m > h.edge_count()) throw std::invalid_argument("m_edge_subgraph: m out of range");
    const auto before = degree_stats(h);
    MEdgeSplit out{h, Graph(h.n())};
    if (m < h.edge_count()) {
        EdgeColoring coloring = vizing_color(h);
        std::vector<std::vector<Edge>> classes(static_cast<std::size_t>(coloring.k));
        for (int i = 0; i < h.edge_count(); ++i)
            classes[static_cast<std::size_t>(coloring.color[static_cast<std::size_t>(i)])].push_back(
                h.edges()[static_cast<std::size_t>(i)]);
        std::vector<int> order(classes.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return classes[static_cast<std::size_t>(a)].size() > classes[static_cast<std::size_t>(b)].size();
        });
        int to_remove = h.edge_count() - m;
        std::vector<Edge> removed;
        for (int idx : order) {
            if (to_remove == 0) break;
            auto& cls = classes[static_cast<std::size_t>(idx)];
            std::sort(cls.begin(), cls.end());
            int take = std::min<int>(to_remove, static_cast<int>(cls.size()));
            removed.insert(removed.end(), cls.begin(), cls.begin() + take);
            to_remove -= take;
        }
        out.removed = Graph(h.n(), std::move(removed));
        out.kept = graph_difference(h, out.removed);
    }

    if (out.kept.edge_count() != m) throw std::logic_error("m_edge_subgraph: kept count mismatch");
    const auto kept_stats = degree_stats(out.kept);
    if (kept_stats.max_degree - kept_stats.min_degree > before.max_degree - before.min_degree + 2)
        throw std::logic_error("m_edge_subgraph: degree spread bound violated");
    const long long removed_max = degree_stats(out.removed).max_degree;
    const long long e = before.edge_count;
    if (removed_max * e > static_cast<long long>(before.max_degree + 1) * (e - m) + e)
        throw std::logic_error("m_edge_subgraph: removed-degree bound violated");
    return out;
}

namespace {

void validate_partition(const std::vector<std::vector<int>>& p, const char* name) {
    if (p.empty()) throw std::invalid_argument(std::string(name) + ": empty partition");
    std::vector<int> all;
    for (const auto& block : p) {
        if (block.empty()) throw std::invalid_argument(std::string(name) + ": empty block");
        all.insert(all.end(), block.begin(), block.end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw std::invalid_argument(std::string(name) + ": repeated element");
}

}  // namespace

RefinementResult equal_size_refine(const std::vector<std::vector<int>>& p,
                                   const std::vector<std::vector<int>>& q) {
    validate_partition(p, "p");
    validate_partition(q, "q");
    std::size_t total_a = 0, total_b = 0;
    for (const auto& b : p) total_a += b.size();
    for (const auto& b : q) total_b += b.size();
    if (total_a != total_b) throw std::invalid_argument("equal_size_refine: ground set size mismatch");

    std::vector<std::vector<int>> pa = p, qa = q;
    for (auto& b : pa) std::sort(b.begin(), b.end());
    for (auto& b : qa) std::sort(b.begin(), b.end());

    RefinementResult result;
    const int ell = static_cast<int>(pa.size() + qa.size());
    while (pa.size() + qa.size() > 2) {
        // Minimum-cardinality block; ties go to the p side, lowest index.
        bool min_in_p = true;
        std::size_t min_idx = 0, min_size = pa[0].size();
        for (std::size_t i = 1; i < pa.size(); ++i)
            if (pa[i].size() < min_size) min_size = pa[i].size(), min_idx = i;
        for (std::size_t i = 0; i < qa.size(); ++i)
            if (qa[i].size() < min_size) min_size = qa[i].size(), min_idx = i, min_in_p = false;

        auto& own = min_in_p ? pa : qa;
        auto& other = min_in_p ? qa : pa;
        std::vector<int> s = std::move(own[min_idx]);
        own.erase(own.begin() + static_cast<std::ptrdiff_t>(min_idx));
        // Carve an equal-size sub-block (lexicographically smallest |s|
        // elements) out of the tightest-fitting partner block: the smallest
        // other-side block that still holds |s| elements. Equal-size blocks
        // then pair exactly instead of fragmenting.
        std::size_t pick = 0;
        for (std::size_t i = 1; i < other.size(); ++i)
            if (other[i].size() >= s.size() &&
                (other[pick].size() < s.size() || other[i].size() < other[pick].size()))
                pick = i;
        std::vector<int> carved(other[pick].begin(),
                                other[pick].begin() + static_cast<std::ptrdiff_t>(s.size()));
        other[pick].erase(other[pick].begin(),
                          other[pick].begin() + static_cast<std::ptrdiff_t>(s.size()));
        if (other[pick].empty()) other.erase(other.begin() + static_cast<std::ptrdiff_t>(pick));

        result.parts_a.push_back(min_in_p ? s : carved);
        result.parts_b.push_back(min_in_p ? carved : s);
    }
    if (pa.size() != 1 || qa.size() != 1 || pa[0].size() != qa[0].size())
        throw std::logic_error("equal_size_refine: base case invariant broken");
    result.parts_a.push_back(std::move(pa[0]));
    result.parts_b.push_back(std::move(qa[0]));
    result.t = static_cast<int>(result.parts_a.size());
    if (result.t > ell - 1) throw std::logic_error("equal_size_refine: part count bound violated");
    return result;
}

std::vector<std::vector<int>> edge_id_partition(const std::vector<BipartiteGraph>& pieces) {
    std::vector<std::vector<int>> partition;
    int next = 0;
    for (const auto& piece : pieces) {
        int m = piece.graph.edge_count();
        if (m == 0) throw std::invalid_argument("edge_id_partition: piece with no edges");
        std::vector<int> ids(static_cast<std::size_t>(m));
        std::iota(ids.begin(), ids.end(), next);
        next += m;
        partition.push_back(std::move(ids));
    }
    return partition;
}

std::pair<std::vector<BipartiteGraph>, std::vector<BipartiteGraph>> split_by_refinement(
    const std::vector<BipartiteGraph>& pieces_a, const std::vector<BipartiteGraph>& pieces_b,
    const RefinementResult& r) {
    auto split_side = [](const std::vector<BipartiteGraph>& pieces,
                         const std::vector<std::vector<int>>& parts) {
        std::vector<Edge> id2edge;
        std::vector<int> id2piece;
        for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
            for (Edge e : pieces[pi].graph.edges()) {
                id2edge.push_back(e);
                id2piece.push_back(static_cast<int>(pi));
            }
        }
        std::vector<char> used(id2edge.size(), 0);
        std::vector<BipartiteGraph> out;
        for (const auto& part : parts) {
            if (part.empty()) throw std::invalid_argument("split_by_refinement: empty refinement part");
            int piece_idx = -1;
            std::vector<Edge> edges;
            for (int id : part) {
                if (id < 0 || id >= static_cast<int>(id2edge.size()) || used[static_cast<std::size_t>(id)])
                    throw std::invalid_argument("refinement inconsistent with input edge sets");
                used[static_cast<std::size_t>(id)] = 1;
                if (piece_idx == -1) piece_idx = id2piece[static_cast<std::size_t>(id)];
                if (piece_idx != id2piece[static_cast<std::size_t>(id)])
                    throw std::invalid_argument("refinement part spans multiple pieces");
                edges.push_back(id2edge[static_cast<std::size_t>(id)]);
            }
            const auto& parent = pieces[static_cast<std::size_t>(piece_idx)];
            out.push_back({Graph(parent.graph.n(), std::move(edges)), parent.parts});
        }
        if (std::count(used.begin(), used.end(), 0) != 0)
            throw std::invalid_argument("refinement does not cover all edges");
        return out;
    };
    return {split_side(pieces_a, r.parts_a), split_side(pieces_b, r.parts_b)};
}

}  // namespace regbip
