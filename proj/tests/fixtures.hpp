#pragma once

// Shared forests and independent oracles for the test suites. Nothing here
// calls the library's canonicalization or lattice code, so the oracles can
// be compared against it.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "latentforest/latentforest.hpp"

namespace fx {

inline lf::Forest quartet() {
    return lf::build_forest({{"1", false}, {"2", false}, {"3", false}, {"4", false}, {"a", true}, {"b", true}},
                            {{"1", "a"}, {"2", "a"}, {"a", "b"}, {"b", "3"}, {"b", "4"}});
}

// minimal forest for a distribution where only 1 and 2 correlate
inline lf::Forest quartet_qf() {
    return lf::build_forest({{"1", false}, {"2", false}, {"3", false}, {"4", false}, {"a", true}},
                            {{"1", "a"}, {"2", "a"}});
}

inline lf::Forest star(int leaves) {
    std::vector<lf::Node> nodes;
    std::vector<lf::IdPair> edges;
    for (int i = 1; i <= leaves; ++i) {
        nodes.push_back({std::to_string(i), false});
        edges.push_back({"a", std::to_string(i)});
    }
    nodes.push_back({"a", true});
    return lf::build_forest(nodes, edges);
}

inline lf::Forest path_1a2() {
    return lf::build_forest({{"1", false}, {"2", false}, {"a", true}}, {{"1", "a"}, {"a", "2"}});
}

inline lf::Forest empty_on(const std::vector<std::string>& ids) {
    std::vector<lf::Node> nodes;
    for (const auto& id : ids) nodes.push_back({id, false});
    return lf::build_forest(nodes, {});
}

/// Observed-leaf partition induced by an edge subset: block label of each
/// observed node (in f.observed() order), normalized to first occurrence.
inline std::vector<int> leaf_partition(const lf::Forest& f, std::uint64_t mask) {
    std::vector<int> parent(f.num_nodes());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    for (std::size_t e = 0; e < f.num_edges(); ++e)
        if ((mask >> e) & 1ULL) parent[static_cast<std::size_t>(find(f.edges()[e].u))] = find(f.edges()[e].v);
    std::map<int, int> label;
    std::vector<int> out;
    for (int v : f.observed()) {
        const int r = find(v);
        auto it = label.emplace(r, static_cast<int>(label.size())).first;
        out.push_back(it->second);
    }
    return out;
}

/// p refines q: any two leaves together in p are together in q.
inline bool refines(const std::vector<int>& p, const std::vector<int>& q) {
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            if (p[i] == p[j] && q[i] != q[j]) return false;
    return true;
}

/// Brute-force lattice: distinct leaf partitions over all edge subsets,
/// with longest-chain depth under refinement.
struct PartitionLattice {
    std::vector<std::vector<int>> parts;
    std::vector<int> depth;
    int max_depth = 0;
};

inline PartitionLattice partition_lattice(const lf::Forest& host) {
    std::set<std::vector<int>> uniq;
    for (std::uint64_t s = 0; s < (1ULL << host.num_edges()); ++s) uniq.insert(leaf_partition(host, s));
    PartitionLattice pl;
    pl.parts.assign(uniq.begin(), uniq.end());
    auto blocks = [](const std::vector<int>& p) { return *std::max_element(p.begin(), p.end()); };
    // fewer blocks means coarser; process finest first
    std::vector<std::size_t> idx(pl.parts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return blocks(pl.parts[a]) > blocks(pl.parts[b]); });
    pl.depth.assign(pl.parts.size(), 0);
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < a; ++b) {
            const auto i = idx[a], j = idx[b];
            if (pl.parts[i] != pl.parts[j] && refines(pl.parts[j], pl.parts[i]))
                pl.depth[i] = std::max(pl.depth[i], pl.depth[j] + 1);
        }
    pl.max_depth = *std::max_element(pl.depth.begin(), pl.depth.end());
    return pl;
}

/// Edge indices on the path between two nodes of a tree (empty if none).
inline std::vector<int> path_edges(const lf::Forest& f, int a, int b) {
    std::vector<int> via(f.num_nodes(), -2);
    std::vector<int> stack{a};
    via[static_cast<std::size_t>(a)] = -1;
    while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        for (auto [w, e] : f.neighbors(x))
            if (via[static_cast<std::size_t>(w)] == -2) {
                via[static_cast<std::size_t>(w)] = e;
                stack.push_back(w);
            }
    }
    std::vector<int> out;
    if (via[static_cast<std::size_t>(b)] == -2) return out;
    for (int x = b; x != a;) {
        const int e = via[static_cast<std::size_t>(x)];
        out.push_back(e);
        x = f.edges()[static_cast<std::size_t>(e)].other(x);
    }
    return out;
}

/// Exponent vectors of all leaf-pair path monomials of a tree.
inline std::vector<std::vector<int>> path_exponents(const lf::Forest& t) {
    std::vector<std::vector<int>> out;
    const auto& obs = t.observed();
    for (std::size_t i = 0; i < obs.size(); ++i)
        for (std::size_t j = i + 1; j < obs.size(); ++j) {
            std::vector<int> u(t.num_edges(), 0);
            for (int e : path_edges(t, obs[i], obs[j])) u[static_cast<std::size_t>(e)] = 1;
            out.push_back(std::move(u));
        }
    return out;
}

/// Degree-2 nodes from which some direction reaches a leaf through degree-2
/// nodes only, i.e. nodes sitting on a subdivided pendant edge of the
/// contracted tree. Only those raise the path-monomial multiplicity: the
/// pieces of a subdivided inner edge stay slack at the diagonal point, so no
/// nonnegative supporting hyperplane can separate them.
inline int pendant_degree_two(const lf::Forest& s) {
    int count = 0;
    for (int v = 0; v < static_cast<int>(s.num_nodes()); ++v) {
        if (s.degree(v) != 2) continue;
        bool pendant = false;
        for (auto [w, e0] : s.neighbors(v)) {
            int prev = v, x = w;
            while (s.degree(x) == 2) {
                const auto& nb = s.neighbors(x);
                const int next = nb[0].first == prev ? nb[1].first : nb[0].first;
                prev = x;
                x = next;
            }
            pendant = pendant || s.degree(x) == 1;
        }
        count += pendant;
    }
    return count;
}

/// Subdivides k uniformly chosen edges with fresh latent nodes d1, d2, ...
inline lf::Forest subdivide(const lf::Forest& t, int k, std::mt19937_64& rng) {
    std::vector<lf::Node> nodes = t.nodes();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : t.edges()) edges.emplace_back(e.u, e.v);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
        const std::size_t e = pick(rng);
        nodes.push_back({"d" + std::to_string(i + 1), true});
        const int h = static_cast<int>(nodes.size()) - 1;
        const auto [x, y] = edges[e];
        edges[e] = {x, h};
        edges.emplace_back(h, y);
    }
    return lf::make_forest(std::move(nodes), edges);
}

/// Same forest with node ids renamed through `rename` and nodes/edges shuffled.
inline lf::Forest relabel(const lf::Forest& f, const std::map<std::string, std::string>& rename, std::mt19937_64& rng) {
    std::vector<lf::Node> nodes;
    for (const auto& n : f.nodes()) {
        auto it = rename.find(n.id);
        nodes.push_back({it == rename.end() ? n.id : it->second, n.latent});
    }
    std::vector<lf::IdPair> edges;
    for (const auto& e : f.edges()) {
        std::pair<std::string, std::string> p{nodes[static_cast<std::size_t>(e.u)].id, nodes[static_cast<std::size_t>(e.v)].id};
        if (rng() & 1ULL) std::swap(p.first, p.second);
        edges.push_back(p);
    }
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::shuffle(edges.begin(), edges.end(), rng);
    return lf::build_forest(nodes, edges);
}

/// Random parameters: correlations uniform in [lo, hi] with random sign, variances in [0.5, 2].
inline lf::ModelParams random_params(const lf::Forest& f, std::mt19937_64& rng, double lo = 0.2, double hi = 0.9) {
    std::uniform_real_distribution<double> c(lo, hi), v(0.5, 2.0);
    lf::ModelParams p;
    for (std::size_t i = 0; i < f.num_observed(); ++i) p.leaf_var.push_back(v(rng));
    for (std::size_t e = 0; e < f.num_edges(); ++e) p.edge_corr.push_back((rng() & 1ULL) ? c(rng) : -c(rng));
    return p;
}

}  // namespace fx
