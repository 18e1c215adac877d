#include "regbip/generators.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "regbip/rng.hpp"

namespace regbip {

Graph complete(int n) {
    if (n < 2) throw std::invalid_argument("complete graph needs n >= 2");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
    return Graph(n, std::move(edges));
}

Graph circulant(int n, const std::vector<int>& offsets) {
    if (n < 2) throw std::invalid_argument("circulant needs n >= 2");
    std::set<int> offs(offsets.begin(), offsets.end());
    std::set<Edge> edges;
    for (int s : offs) {
        if (s < 1 || s > n / 2) throw std::invalid_argument("invalid circulant offset " + std::to_string(s));
        for (int i = 0; i < n; ++i) edges.insert(make_edge(i, (i + s) % n));
    }
    return Graph(n, std::vector<Edge>(edges.begin(), edges.end()));
}

Graph random_regular(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 0 || d > n - 1) throw std::invalid_argument("random_regular: infeasible n, d");
    if ((static_cast<long long>(n) * d) % 2 != 0)
        throw std::invalid_argument("random_regular: n*d must be even");
    if (d == 0) return Graph(n);

    Rng rng(seed);
    constexpr int kRestartCap = 100000;
    for (int attempt = 0; attempt < kRestartCap; ++attempt) {
        std::vector<int> stubs;
        stubs.reserve(static_cast<std::size_t>(n) * d);
        for (int v = 0; v < n; ++v)
            for (int k = 0; k < d; ++k) stubs.push_back(v);
        rng.shuffle(stubs);

        std::set<Edge> edges;
        bool stuck = false;
        while (!stubs.empty()) {
            int u = stubs.back();
            stubs.pop_back();
            // Random partner draws, then a deterministic scan before giving up.
            std::size_t pick = stubs.size();
            for (std::size_t tries = 0; tries < 2 * stubs.size() + 2 && !stubs.empty(); ++tries) {
                std::size_t r = static_cast<std::size_t>(rng.below(stubs.size()));
                int w = stubs[r];
                if (w != u && !edges.count(make_edge(u, w))) {
                    pick = r;
                    break;
                }
            }
            if (pick == stubs.size()) {
                for (std::size_t r = 0; r < stubs.size(); ++r) {
                    int w = stubs[r];
                    if (w != u && !edges.count(make_edge(u, w))) {
                        pick = r;
                        break;
                    }
                }
            }
            if (pick == stubs.size()) {
                stuck = true;
                break;
            }
            edges.insert(make_edge(u, stubs[pick]));
            stubs[pick] = stubs.back();
            stubs.pop_back();
        }
        if (!stuck) return Graph(n, std::vector<Edge>(edges.begin(), edges.end()));
    }
    throw std::runtime_error("random_regular: restart cap exceeded");
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& body) {
    std::map<std::string, std::string> kv;
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("bad generator field: " + item);
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

long long need_int(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("generator spec missing " + key);
    return std::stoll(it->second);
}

}  // namespace

Graph generate_from_spec(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("generator spec needs kind: prefix");
    std::string kind = spec.substr(0, colon);
    auto kv = parse_kv(spec.substr(colon + 1));
    if (kind == "complete") return complete(static_cast<int>(need_int(kv, "n")));
    if (kind == "circulant") {
        int n = static_cast<int>(need_int(kv, "n"));
        auto it = kv.find("offsets");
        if (it == kv.end()) throw std::invalid_argument("circulant spec missing offsets");
        std::vector<int> offsets;
        std::istringstream in(it->second);
        std::string tok;
        while (std::getline(in, tok, '+')) offsets.push_back(std::stoi(tok));
        return circulant(n, offsets);
    }
    if (kind == "random_regular") {
        std::uint64_t seed = kv.count("seed") ? static_cast<std::uint64_t>(need_int(kv, "seed")) : 0;
        return random_regular(static_cast<int>(need_int(kv, "n")), static_cast<int>(need_int(kv, "d")), seed);
    }
    throw std::invalid_argument("unknown generator kind: " + kind);
}

}  // namespace regbip
