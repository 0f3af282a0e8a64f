#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "latentforest/error.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/monomial.hpp"
#include "latentforest/rational.hpp"

namespace lf {

namespace detail {

/// A subforest qf mapped onto its host: which host nodes/edges it uses.
struct Embedding {
    std::vector<bool> node_in;  // host node index -> present in qf
    std::vector<bool> edge_in;  // host edge index -> present in qf
    std::vector<int> sub_degree;
};

inline Embedding embed_subforest(const Forest& host, const Forest& qf) {
    for (std::size_t i = 0; i < host.num_nodes(); ++i)
        if (host.is_latent(static_cast<int>(i)) && host.degree(static_cast<int>(i)) <= 1)
            throw InvalidArgument("host has latent node '" + host.id(static_cast<int>(i)) +
                                  "' of degree <= 1");
    Embedding em;
    em.node_in.assign(host.num_nodes(), false);
    em.edge_in.assign(host.num_edges(), false);
    em.sub_degree.assign(host.num_nodes(), 0);
    std::vector<int> map(qf.num_nodes(), -1);
    for (std::size_t i = 0; i < qf.num_nodes(); ++i) {
        const Node& nd = qf.nodes()[i];
        const int h = host.index_of(nd.id);
        if (h < 0) throw NotSubforest("node '" + nd.id + "' is not in the host");
        if (host.is_latent(h) != nd.latent)
            throw NotSubforest("node '" + nd.id + "' has a different latent flag in the host");
        map[i] = h;
        em.node_in[static_cast<std::size_t>(h)] = true;
    }
    if (qf.num_observed() != host.num_observed())
        throw LeafMismatch("subforest and host observe different node sets");
    for (const Edge& e : qf.edges()) {
        const int he = host.find_edge(map[static_cast<std::size_t>(e.u)], map[static_cast<std::size_t>(e.v)]);
        if (he < 0) throw NotSubforest("edge " + qf.id(e.u) + "--" + qf.id(e.v) + " is not in the host");
        em.edge_in[static_cast<std::size_t>(he)] = true;
        ++em.sub_degree[static_cast<std::size_t>(map[static_cast<std::size_t>(e.u)])];
        ++em.sub_degree[static_cast<std::size_t>(map[static_cast<std::size_t>(e.v)])];
    }
    return em;
}

}  // namespace detail

/**
 * Closed-form RLCT of a Gaussian latent forest model on `host` at a true
 * distribution whose correlation pattern is realized by the subforest qf:
 * lambda = dim M(qf) + (1/2) sum over host edges outside qf of the number
 * of endpoints lying in qf; mult = 1 + number of degree-2 host nodes outside qf.
 */
inline Rlct rlct_forest_pair(const Forest& host, const Forest& qf) {
    const detail::Embedding em = detail::embed_subforest(host, qf);
    std::int64_t touching = 0;
    int deg2_outside = 0;
    for (std::size_t i = 0; i < host.num_nodes(); ++i) {
        const int d = host.degree(static_cast<int>(i));
        if (em.node_in[i])
            touching += d - em.sub_degree[i];
        else if (d == 2)
            ++deg2_outside;
    }
    const std::int64_t dim = model_dimension(qf);
    return Rlct{Rational(2 * dim + touching, 2), 1 + deg2_outside};
}

/// A piece of the host carrying edges outside the subforest; `leaves` are its
/// nodes that belong to the subforest.
struct Subtree {
    Forest tree;
    std::vector<std::string> leaves;
    std::vector<int> host_edges;
};

/**
 * Splits the host edges outside qf into trees. Two such edges share a tree
 * when they meet at a host node that is not in qf; nodes of qf act as cut
 * points, so each of them is a leaf of every tree it touches.
 */
inline std::vector<Subtree> subtree_decomposition(const Forest& host, const Forest& qf) {
    const detail::Embedding em = detail::embed_subforest(host, qf);
    const std::size_t ne = host.num_edges();
    std::vector<int> uf(ne);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
        while (uf[static_cast<std::size_t>(x)] != x) {
            uf[static_cast<std::size_t>(x)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
            x = uf[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (std::size_t x = 0; x < host.num_nodes(); ++x) {
        if (em.node_in[x]) continue;
        int first = -1;
        for (auto [w, e] : host.neighbors(static_cast<int>(x))) {
            (void)w;
            if (em.edge_in[static_cast<std::size_t>(e)]) continue;
            if (first < 0)
                first = e;
            else
                uf[static_cast<std::size_t>(find(e))] = find(first);
        }
    }
    std::vector<int> group_of(ne, -1);
    std::vector<std::vector<int>> groups;
    for (std::size_t e = 0; e < ne; ++e) {
        if (em.edge_in[e]) continue;
        const int r = find(static_cast<int>(e));
        if (group_of[static_cast<std::size_t>(r)] < 0) {
            group_of[static_cast<std::size_t>(r)] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(group_of[static_cast<std::size_t>(r)])].push_back(static_cast<int>(e));
    }

    std::vector<Subtree> out;
    for (const auto& g : groups) {
        std::vector<bool> used(host.num_nodes(), false);
        for (int e : g) {
            used[static_cast<std::size_t>(host.edges()[static_cast<std::size_t>(e)].u)] = true;
            used[static_cast<std::size_t>(host.edges()[static_cast<std::size_t>(e)].v)] = true;
        }
        Subtree st;
        std::vector<Node> nodes;
        std::vector<int> remap(host.num_nodes(), -1);
        for (std::size_t i = 0; i < host.num_nodes(); ++i) {
            if (!used[i]) continue;
            remap[i] = static_cast<int>(nodes.size());
            nodes.push_back({host.id(static_cast<int>(i)), !em.node_in[i]});
            if (em.node_in[i]) st.leaves.push_back(host.id(static_cast<int>(i)));
        }
        std::vector<std::pair<int, int>> edges;
        for (int e : g)
            edges.emplace_back(remap[static_cast<std::size_t>(host.edges()[static_cast<std::size_t>(e)].u)],
                               remap[static_cast<std::size_t>(host.edges()[static_cast<std::size_t>(e)].v)]);
        st.tree = make_forest(std::move(nodes), edges);
        st.host_edges = g;
        out.push_back(std::move(st));
    }
    return out;
}

/**
 * Zero-part phase function: one coordinate per host edge outside qf (host
 * order), one term per pair of subtree leaves whose monomial is the path
 * between them, all constants zero, every coordinate on [-1, 1].
 */
inline MonomialSos zero_part_monomials(const Forest& host, const Forest& qf) {
    const auto parts = subtree_decomposition(host, qf);
    const detail::Embedding em = detail::embed_subforest(host, qf);
    std::vector<int> coord(host.num_edges(), -1);
    MonomialSos sos;
    for (std::size_t e = 0; e < host.num_edges(); ++e) {
        if (em.edge_in[e]) continue;
        coord[e] = sos.dim++;
        sos.names.push_back(host.edge_label(static_cast<int>(e)));
    }
    sos.domain.assign(static_cast<std::size_t>(sos.dim), Interval{-1.0, 1.0});
    for (const Subtree& st : parts) {
        const detail::RootedForest rooted(st.tree);
        std::vector<int> leaf_idx;
        for (const auto& id : st.leaves) leaf_idx.push_back(st.tree.index_of(id));
        for (std::size_t a = 0; a < leaf_idx.size(); ++a) {
            for (std::size_t b = a + 1; b < leaf_idx.size(); ++b) {
                MonomialTerm t;
                t.u.assign(static_cast<std::size_t>(sos.dim), 0);
                for (int le : rooted.path_edges(leaf_idx[a], leaf_idx[b]))
                    t.u[static_cast<std::size_t>(coord[static_cast<std::size_t>(
                        st.host_edges[static_cast<std::size_t>(le)])])] = 1;
                sos.terms.push_back(std::move(t));
            }
        }
    }
    return sos;
}

}  // namespace lf
