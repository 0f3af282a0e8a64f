#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "latentforest/error.hpp"

namespace lf {

struct Node {
    std::string id;
    bool latent = false;
};

/// Undirected edge between two node indices of the owning forest.
struct Edge {
    int u = -1;
    int v = -1;
    int other(int x) const { return x == u ? v : u; }
};

using IdPair = std::pair<std::string, std::string>;

/// Orders ids so that embedded digit runs compare numerically ("2" < "10").
inline bool natural_less(std::string_view a, std::string_view b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            std::string_view ra = a.substr(i, ie - i), rb = b.substr(j, je - j);
            while (ra.size() > 1 && ra.front() == '0') ra.remove_prefix(1);
            while (rb.size() > 1 && rb.front() == '0') rb.remove_prefix(1);
            if (ra.size() != rb.size()) return ra.size() < rb.size();
            if (ra != rb) return ra < rb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
    return a < b;
}

/**
 * Leaf-labelled forest with latent/observed node flags.
 *
 * Invariants (enforced by build_forest): simple and acyclic, unique node ids,
 * observed nodes have degree at most one. Immutable once built.
 */
class Forest {
public:
    Forest() = default;

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
    const std::string& id(int i) const { return node(i).id; }
    bool is_latent(int i) const { return node(i).latent; }

    int index_of(std::string_view id) const {
        auto it = index_.find(std::string(id));
        return it == index_.end() ? -1 : it->second;
    }
    bool has_node(std::string_view id) const { return index_of(id) >= 0; }

    int degree(int i) const { return static_cast<int>(adj_.at(static_cast<std::size_t>(i)).size()); }

    /// (neighbour index, edge index) pairs of node i.
    const std::vector<std::pair<int, int>>& neighbors(int i) const {
        return adj_.at(static_cast<std::size_t>(i));
    }

    /// Observed node indices in declaration order.
    const std::vector<int>& observed() const { return observed_; }

    std::vector<std::string> observed_ids() const {
        std::vector<std::string> out;
        out.reserve(observed_.size());
        for (int v : observed_) out.push_back(nodes_[static_cast<std::size_t>(v)].id);
        return out;
    }

    std::size_t num_observed() const { return observed_.size(); }
    std::size_t num_latent() const { return nodes_.size() - observed_.size(); }

    int find_edge(int a, int b) const {
        if (a < 0 || b < 0) return -1;
        for (auto [w, e] : neighbors(a))
            if (w == b) return e;
        return -1;
    }
    int find_edge(std::string_view a, std::string_view b) const {
        return find_edge(index_of(a), index_of(b));
    }

    std::string edge_label(int e) const {
        const Edge& ed = edges_.at(static_cast<std::size_t>(e));
        return nodes_[static_cast<std::size_t>(ed.u)].id + "--" + nodes_[static_cast<std::size_t>(ed.v)].id;
    }

    std::vector<IdPair> edge_ids() const {
        std::vector<IdPair> out;
        out.reserve(edges_.size());
        for (const Edge& e : edges_) out.emplace_back(id(e.u), id(e.v));
        return out;
    }

    /// Connected-component label of every node (labels 0..k-1 in order of first node).
    std::vector<int> components() const {
        std::vector<int> comp(nodes_.size(), -1);
        int next = 0;
        for (std::size_t s = 0; s < nodes_.size(); ++s) {
            if (comp[s] >= 0) continue;
            std::vector<int> stack{static_cast<int>(s)};
            comp[s] = next;
            while (!stack.empty()) {
                int x = stack.back();
                stack.pop_back();
                for (auto [w, e] : adj_[static_cast<std::size_t>(x)]) {
                    (void)e;
                    if (comp[static_cast<std::size_t>(w)] < 0) {
                        comp[static_cast<std::size_t>(w)] = next;
                        stack.push_back(w);
                    }
                }
            }
            ++next;
        }
        return comp;
    }

private:
    friend Forest make_forest(std::vector<Node> nodes, const std::vector<std::pair<int, int>>& edges);

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::vector<int> observed_;
};

/// Builds and validates a forest from node-index edges.
inline Forest make_forest(std::vector<Node> nodes, const std::vector<std::pair<int, int>>& edges) {
    Forest f;
    f.nodes_ = std::move(nodes);
    const int n = static_cast<int>(f.nodes_.size());
    for (int i = 0; i < n; ++i) {
        const std::string& id = f.nodes_[static_cast<std::size_t>(i)].id;
        if (id.empty()) throw InvalidArgument("empty node id");
        if (!f.index_.emplace(id, i).second) throw InvalidArgument("duplicate node id '" + id + "'");
        if (!f.nodes_[static_cast<std::size_t>(i)].latent) f.observed_.push_back(i);
    }
    f.adj_.assign(f.nodes_.size(), {});
    std::vector<int> uf(f.nodes_.size());
    std::iota(uf.begin(), uf.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (uf[static_cast<std::size_t>(x)] != x) {
            uf[static_cast<std::size_t>(x)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
            x = uf[static_cast<std::size_t>(x)];
        }
        return x;
    };
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw UnknownNode("edge references a missing node");
        const std::string& ia = f.nodes_[static_cast<std::size_t>(a)].id;
        const std::string& ib = f.nodes_[static_cast<std::size_t>(b)].id;
        if (a == b) throw CycleError("self-loop at '" + ia + "'");
        if (!seen.emplace(std::min(a, b), std::max(a, b)).second)
            throw DuplicateEdge("duplicate edge " + ia + "--" + ib);
        int ra = find(a), rb = find(b);
        if (ra == rb) throw CycleError("edge " + ia + "--" + ib + " closes a cycle");
        uf[static_cast<std::size_t>(ra)] = rb;
        const int e = static_cast<int>(f.edges_.size());
        f.edges_.push_back({a, b});
        f.adj_[static_cast<std::size_t>(a)].emplace_back(b, e);
        f.adj_[static_cast<std::size_t>(b)].emplace_back(a, e);
    }
    for (int i = 0; i < n; ++i) {
        if (!f.nodes_[static_cast<std::size_t>(i)].latent && f.degree(i) > 1)
            throw ObservedDegreeError("observed node '" + f.nodes_[static_cast<std::size_t>(i)].id +
                                      "' has degree " + std::to_string(f.degree(i)));
    }
    return f;
}

/// Validated forest from node records and id-pair edges.
inline Forest build_forest(std::vector<Node> nodes, const std::vector<IdPair>& edges) {
    std::unordered_map<std::string, int> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i].id, static_cast<int>(i));
    std::vector<std::pair<int, int>> ie;
    ie.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        auto ia = idx.find(a), ib = idx.find(b);
        if (ia == idx.end()) throw UnknownNode("unknown node '" + a + "'");
        if (ib == idx.end()) throw UnknownNode("unknown node '" + b + "'");
        ie.emplace_back(ia->second, ib->second);
    }
    return make_forest(std::move(nodes), ie);
}

/// Forest restricted to the edges flagged in `keep` (all nodes retained).
inline Forest edge_subforest(const Forest& f, const std::vector<bool>& keep) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t e = 0; e < f.num_edges(); ++e)
        if (keep[e]) edges.emplace_back(f.edges()[e].u, f.edges()[e].v);
    return make_forest(f.nodes(), edges);
}

/// dim M(F) = |V| + |E| - l2, l2 = number of degree-two nodes.
inline int model_dimension(const Forest& f) {
    int l2 = 0;
    for (std::size_t i = 0; i < f.num_nodes(); ++i)
        if (f.degree(static_cast<int>(i)) == 2) ++l2;
    return static_cast<int>(f.num_observed() + f.num_edges()) - l2;
}

/// Pairs of observed ids joined by a path in f (each unordered pair once,
/// in observed-declaration order).
inline std::vector<IdPair> connected_observed_pairs(const Forest& f) {
    const auto comp = f.components();
    std::vector<IdPair> out;
    const auto& obs = f.observed();
    for (std::size_t i = 0; i < obs.size(); ++i)
        for (std::size_t j = i + 1; j < obs.size(); ++j)
            if (comp[static_cast<std::size_t>(obs[i])] == comp[static_cast<std::size_t>(obs[j])])
                out.emplace_back(f.id(obs[i]), f.id(obs[j]));
    return out;
}

/**
 * Forest with no latent node of degree <= 2 plus a canonical labelling.
 *
 * Latent nodes are relabelled deterministically; `key` is a leaf-anchored
 * encoding that is equal for two forests iff they are isomorphic by a map
 * fixing observed ids. `origin` maps each canonical latent id back to the id
 * it had in the forest that was canonicalized.
 */
struct CanonicalForest {
    Forest forest;
    std::string key;
    std::uint64_t hash = 0;
    std::unordered_map<std::string, std::string> origin;

    friend bool operator==(const CanonicalForest& a, const CanonicalForest& b) { return a.key == b.key; }
    friend bool operator<(const CanonicalForest& a, const CanonicalForest& b) { return a.key < b.key; }
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string quote_id(const std::string& id) { return std::to_string(id.size()) + ":" + id; }

}  // namespace detail

/**
 * Deletes latent nodes of degree <= 1 and contracts latent nodes of degree 2
 * (their two edges merge into one) until neither applies, then relabels.
 */
inline CanonicalForest canonicalize(const Forest& f) {
    const std::size_t n = f.num_nodes();
    std::vector<std::set<int>> adj(n);
    for (const Edge& e : f.edges()) {
        adj[static_cast<std::size_t>(e.u)].insert(e.v);
        adj[static_cast<std::size_t>(e.v)].insert(e.u);
    }
    std::vector<bool> alive(n, true);
    std::deque<int> work;
    for (std::size_t i = 0; i < n; ++i)
        if (f.nodes()[i].latent) work.push_back(static_cast<int>(i));
    while (!work.empty()) {
        const int x = work.front();
        work.pop_front();
        const auto xs = static_cast<std::size_t>(x);
        if (!alive[xs] || adj[xs].size() > 2) continue;
        if (adj[xs].size() <= 1) {
            alive[xs] = false;
            for (int w : adj[xs]) {
                adj[static_cast<std::size_t>(w)].erase(x);
                if (f.nodes()[static_cast<std::size_t>(w)].latent) work.push_back(w);
            }
            adj[xs].clear();
        } else {
            const int a = *adj[xs].begin();
            const int b = *std::next(adj[xs].begin());
            alive[xs] = false;
            adj[xs].clear();
            auto& aa = adj[static_cast<std::size_t>(a)];
            auto& bb = adj[static_cast<std::size_t>(b)];
            aa.erase(x);
            bb.erase(x);
            aa.insert(b);
            bb.insert(a);
        }
    }

    // Observed nodes in natural id order; each component rooted at its
    // smallest observed id.
    std::vector<int> obs;
    for (std::size_t i = 0; i < n; ++i)
        if (!f.nodes()[i].latent) obs.push_back(static_cast<int>(i));
    std::sort(obs.begin(), obs.end(),
              [&](int a, int b) { return natural_less(f.id(a), f.id(b)); });

    std::unordered_set<std::string> observed_ids;
    for (int v : obs) observed_ids.insert(f.id(v));

    std::vector<bool> visited(n, false);
    std::function<std::string(int, int)> encode = [&](int x, int parent) -> std::string {
        visited[static_cast<std::size_t>(x)] = true;
        std::vector<std::string> kids;
        for (int w : adj[static_cast<std::size_t>(x)])
            if (w != parent) kids.push_back(encode(w, x));
        std::sort(kids.begin(), kids.end());
        std::string s = f.nodes()[static_cast<std::size_t>(x)].latent ? std::string("*")
                                                                      : detail::quote_id(f.id(x));
        if (!kids.empty()) {
            s += "(";
            for (std::size_t k = 0; k < kids.size(); ++k) {
                if (k) s += ",";
                s += kids[k];
            }
            s += ")";
        }
        return s;
    };

    // Labelling pass: children visited in the order of their encodings.
    std::vector<Node> out_nodes;
    std::vector<int> new_index(n, -1);
    for (int v : obs) {
        new_index[static_cast<std::size_t>(v)] = static_cast<int>(out_nodes.size());
        out_nodes.push_back({f.id(v), false});
    }
    CanonicalForest cf;
    int latent_counter = 0;
    auto fresh_id = [&](int k) {
        std::string cand = "h" + std::to_string(k);
        while (observed_ids.count(cand)) cand = "_" + cand;
        return cand;
    };
    std::function<void(int, int)> label = [&](int x, int parent) {
        std::vector<std::pair<std::string, int>> kids;
        for (int w : adj[static_cast<std::size_t>(x)]) {
            if (w == parent) continue;
            std::fill(visited.begin(), visited.end(), false);
            kids.emplace_back(encode(w, x), w);
        }
        std::sort(kids.begin(), kids.end());
        for (auto& [enc, w] : kids) {
            (void)enc;
            if (f.nodes()[static_cast<std::size_t>(w)].latent) {
                new_index[static_cast<std::size_t>(w)] = static_cast<int>(out_nodes.size());
                std::string nid = fresh_id(latent_counter++);
                cf.origin.emplace(nid, f.id(w));
                out_nodes.push_back({nid, true});
            }
            label(w, x);
        }
    };

    std::vector<std::string> comp_codes;
    std::fill(visited.begin(), visited.end(), false);
    std::vector<bool> done(n, false);
    for (int v : obs) {
        if (done[static_cast<std::size_t>(v)]) continue;
        std::fill(visited.begin(), visited.end(), false);
        comp_codes.push_back(encode(v, -1));
        for (std::size_t i = 0; i < n; ++i)
            if (visited[i]) done[i] = true;
        label(v, -1);
    }

    std::vector<std::pair<int, int>> out_edges;
    for (std::size_t x = 0; x < n; ++x) {
        if (!alive[x]) continue;
        for (int w : adj[x]) {
            if (static_cast<int>(x) < w) {
                int a = new_index[x], b = new_index[static_cast<std::size_t>(w)];
                out_edges.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
    }
    std::sort(out_edges.begin(), out_edges.end());
    cf.forest = make_forest(std::move(out_nodes), out_edges);
    for (std::size_t k = 0; k < comp_codes.size(); ++k) {
        if (k) cf.key += ";";
        cf.key += comp_codes[k];
    }
    cf.hash = detail::fnv1a(cf.key);
    return cf;
}

/// True when no latent node has degree <= 2.
inline bool is_canonical_shape(const Forest& f) {
    for (std::size_t i = 0; i < f.num_nodes(); ++i)
        if (f.nodes()[i].latent && f.degree(static_cast<int>(i)) <= 2) return false;
    return true;
}

namespace detail {

/// Rooted view of a forest for path queries.
struct RootedForest {
    std::vector<int> parent, parent_edge, depth, comp;

    explicit RootedForest(const Forest& f) {
        const std::size_t n = f.num_nodes();
        parent.assign(n, -1);
        parent_edge.assign(n, -1);
        depth.assign(n, -1);
        comp.assign(n, -1);
        int c = 0;
        for (std::size_t s = 0; s < n; ++s) {
            if (depth[s] >= 0) continue;
            depth[s] = 0;
            comp[s] = c;
            std::deque<int> q{static_cast<int>(s)};
            while (!q.empty()) {
                int x = q.front();
                q.pop_front();
                for (auto [w, e] : f.neighbors(x)) {
                    if (depth[static_cast<std::size_t>(w)] >= 0) continue;
                    depth[static_cast<std::size_t>(w)] = depth[static_cast<std::size_t>(x)] + 1;
                    parent[static_cast<std::size_t>(w)] = x;
                    parent_edge[static_cast<std::size_t>(w)] = e;
                    comp[static_cast<std::size_t>(w)] = c;
                    q.push_back(w);
                }
            }
            ++c;
        }
    }

    /// Edge indices on the path a..b; empty if a == b. Requires same component.
    std::vector<int> path_edges(int a, int b) const {
        std::vector<int> left, right;
        while (a != b) {
            if (depth[static_cast<std::size_t>(a)] >= depth[static_cast<std::size_t>(b)]) {
                left.push_back(parent_edge[static_cast<std::size_t>(a)]);
                a = parent[static_cast<std::size_t>(a)];
            } else {
                right.push_back(parent_edge[static_cast<std::size_t>(b)]);
                b = parent[static_cast<std::size_t>(b)];
            }
        }
        left.insert(left.end(), right.rbegin(), right.rend());
        return left;
    }
};

}  // namespace detail

/**
 * The q-forest F*(q): union of the host paths between the correlated pairs,
 * all observed nodes kept, latent nodes without a retained edge dropped.
 * Node and edge order follow the host declaration order.
 */
inline Forest q_forest(const Forest& host, const std::vector<IdPair>& correlated_pairs) {
    const detail::RootedForest rooted(host);
    std::vector<bool> keep(host.num_edges(), false);
    std::set<std::pair<int, int>> wanted;
    for (const auto& [a, b] : correlated_pairs) {
        const int ia = host.index_of(a), ib = host.index_of(b);
        if (ia < 0) throw UnknownNode("unknown node '" + a + "'");
        if (ib < 0) throw UnknownNode("unknown node '" + b + "'");
        if (host.is_latent(ia) || host.is_latent(ib))
            throw UnrealizablePattern("correlated pairs must join observed nodes");
        if (ia == ib) throw UnrealizablePattern("pair joins a node with itself");
        if (rooted.comp[static_cast<std::size_t>(ia)] != rooted.comp[static_cast<std::size_t>(ib)])
            throw UnrealizablePattern("pair " + a + "," + b + " spans two host components");
        wanted.emplace(std::min(ia, ib), std::max(ia, ib));
        for (int e : rooted.path_edges(ia, ib)) keep[static_cast<std::size_t>(e)] = true;
    }

    std::vector<bool> node_kept(host.num_nodes(), false);
    for (std::size_t i = 0; i < host.num_nodes(); ++i)
        node_kept[i] = !host.nodes()[i].latent;
    for (std::size_t e = 0; e < host.num_edges(); ++e) {
        if (!keep[e]) continue;
        node_kept[static_cast<std::size_t>(host.edges()[e].u)] = true;
        node_kept[static_cast<std::size_t>(host.edges()[e].v)] = true;
    }
    std::vector<Node> nodes;
    std::vector<int> remap(host.num_nodes(), -1);
    for (std::size_t i = 0; i < host.num_nodes(); ++i) {
        if (!node_kept[i]) continue;
        remap[i] = static_cast<int>(nodes.size());
        nodes.push_back(host.nodes()[i]);
    }
    std::vector<std::pair<int, int>> edges;
    for (std::size_t e = 0; e < host.num_edges(); ++e)
        if (keep[e])
            edges.emplace_back(remap[static_cast<std::size_t>(host.edges()[e].u)],
                               remap[static_cast<std::size_t>(host.edges()[e].v)]);
    Forest out = make_forest(std::move(nodes), edges);

    // The union of paths must not connect any pair that was not requested.
    const auto comp = out.components();
    const auto& obs = out.observed();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        for (std::size_t j = i + 1; j < obs.size(); ++j) {
            if (comp[static_cast<std::size_t>(obs[i])] != comp[static_cast<std::size_t>(obs[j])]) continue;
            const int ha = host.index_of(out.id(obs[i])), hb = host.index_of(out.id(obs[j]));
            if (!wanted.count({std::min(ha, hb), std::max(ha, hb)}))
                throw UnrealizablePattern("pattern forces " + out.id(obs[i]) + "," + out.id(obs[j]) +
                                          " to be correlated");
        }
    }
    return out;
}

/// Realizes a canonical class inside the host as the q-forest of its leaf
/// connectivity; throws NotInLattice if the class is not a subforest model.
inline Forest steiner_subforest(const Forest& host, const CanonicalForest& sub) {
    auto ids_a = host.observed_ids();
    auto ids_b = sub.forest.observed_ids();
    std::sort(ids_a.begin(), ids_a.end());
    std::sort(ids_b.begin(), ids_b.end());
    if (ids_a != ids_b) throw NotInLattice("observed nodes differ from the host's");
    Forest q;
    try {
        q = q_forest(host, connected_observed_pairs(sub.forest));
    } catch (const UnrealizablePattern& e) {
        throw NotInLattice(std::string("class is not realizable in the host: ") + e.what());
    }
    if (canonicalize(q).key != sub.key) throw NotInLattice("class is not a subforest of the host");
    return q;
}

}  // namespace lf
