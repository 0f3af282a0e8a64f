#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "latentforest/error.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/forest_rlct.hpp"

namespace lf {

/// Largest host (in edges) whose subforest lattice is enumerated.
inline constexpr std::size_t kMaxLatticeEdges = 24;

/**
 * Lattice of subforest models of a canonical host. Every class is stored
 * with its minimal realization inside the host as an edge mask (bit e =
 * host edge e); classes are ordered by that mask read as an integer, so
 * index 0 is the empty forest and the last index the host itself.
 */
class ModelLattice {
public:
    const Forest& host() const { return host_; }
    std::size_t size() const { return classes_.size(); }
    const CanonicalForest& operator[](std::size_t i) const { return classes_.at(i); }
    const std::vector<CanonicalForest>& classes() const { return classes_; }
    std::uint64_t mask(std::size_t i) const { return masks_.at(i); }
    int depth(std::size_t i) const { return depth_.at(i); }
    int max_depth() const { return depth_.empty() ? 0 : *std::max_element(depth_.begin(), depth_.end()); }
    std::size_t top() const { return classes_.size() - 1; }

    /// Model i is contained in model j.
    bool leq(std::size_t i, std::size_t j) const { return (masks_.at(i) & ~masks_.at(j)) == 0; }

    /// Host-edge indicator string of class i, e.g. "1111110".
    std::string code(std::size_t i) const {
        std::string s;
        for (std::size_t e = 0; e < host_.num_edges(); ++e) s += ((masks_.at(i) >> e) & 1ULL) ? '1' : '0';
        return s;
    }

    /// Index of the class with the given canonical key, or -1.
    int find(const std::string& key) const {
        auto it = by_key_.find(key);
        return it == by_key_.end() ? -1 : it->second;
    }

    /// The minimal realization of class i inside the host.
    Forest realization(std::size_t i) const {
        std::vector<bool> keep(host_.num_edges());
        for (std::size_t e = 0; e < keep.size(); ++e) keep[e] = (masks_.at(i) >> e) & 1ULL;
        return edge_subforest(host_, keep);
    }

    /// Canonical-key to index lookup of the class of an edge subset.
    std::size_t class_of_edges(std::uint64_t edges) const {
        return static_cast<std::size_t>(by_mask_.at(steiner_mask(edges)));
    }

    /// RLCT of model `sup` at a true distribution in model `sub`; cached.
    Rlct pair_rlct(std::size_t sub, std::size_t sup) const {
        if (!leq(sub, sup)) throw NotComparable("model " + std::to_string(sub) + " is not below " + std::to_string(sup));
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->values.find({sub, sup});
            if (it != cache_->values.end()) return it->second;
        }
        const Forest sup_forest = classes_[sup].forest;
        const Forest q = steiner_subforest(sup_forest, classes_[sub]);
        const Rlct r = rlct_forest_pair(sup_forest, q);
        std::lock_guard<std::mutex> lock(cache_->mu);
        cache_->values.emplace(std::make_pair(sub, sup), r);
        return r;
    }

    /// Removes dangling latent edges until every latent node in the subset
    /// has degree zero or at least two.
    std::uint64_t steiner_mask(std::uint64_t edges) const {
        std::vector<int> deg(host_.num_nodes(), 0);
        for (std::size_t e = 0; e < host_.num_edges(); ++e)
            if ((edges >> e) & 1ULL) {
                ++deg[static_cast<std::size_t>(host_.edges()[e].u)];
                ++deg[static_cast<std::size_t>(host_.edges()[e].v)];
            }
        std::vector<int> stack;
        for (std::size_t x = 0; x < host_.num_nodes(); ++x)
            if (host_.is_latent(static_cast<int>(x)) && deg[x] == 1) stack.push_back(static_cast<int>(x));
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            if (deg[static_cast<std::size_t>(x)] != 1) continue;
            for (auto [w, e] : host_.neighbors(x)) {
                if (!((edges >> e) & 1ULL)) continue;
                edges &= ~(1ULL << e);
                --deg[static_cast<std::size_t>(x)];
                if (--deg[static_cast<std::size_t>(w)] == 1 && host_.is_latent(w)) stack.push_back(w);
                break;
            }
        }
        return edges;
    }

private:
    friend ModelLattice subforest_lattice(const Forest& host);

    struct Cache {
        std::mutex mu;
        std::map<std::pair<std::size_t, std::size_t>, Rlct> values;
    };

    Forest host_;
    std::vector<CanonicalForest> classes_;
    std::vector<std::uint64_t> masks_;
    std::vector<int> depth_;
    std::unordered_map<std::string, int> by_key_;
    std::unordered_map<std::uint64_t, int> by_mask_;
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/**
 * Enumerates all subforest models of a canonical host (no latent node of
 * degree <= 2). Depth of a class is the length of the longest chain of
 * strictly smaller classes below it.
 */
inline ModelLattice subforest_lattice(const Forest& host) {
    if (!is_canonical_shape(host)) throw NotCanonical("host has a latent node of degree <= 2");
    if (host.num_edges() > kMaxLatticeEdges)
        throw TooLarge("host has " + std::to_string(host.num_edges()) + " edges; at most " +
                       std::to_string(kMaxLatticeEdges) + " are supported");
    ModelLattice lat;
    lat.host_ = host;
    const std::uint64_t full = host.num_edges() == 0 ? 0 : ((1ULL << host.num_edges()) - 1);
    std::vector<char> seen(static_cast<std::size_t>(full) + 1, 0);
    for (std::uint64_t s = 0; s <= full; ++s) seen[static_cast<std::size_t>(lat.steiner_mask(s))] = 1;
    for (std::uint64_t s = 0; s <= full; ++s)
        if (seen[static_cast<std::size_t>(s)]) lat.masks_.push_back(s);

    std::vector<bool> keep(host.num_edges());
    for (std::size_t i = 0; i < lat.masks_.size(); ++i) {
        for (std::size_t e = 0; e < keep.size(); ++e) keep[e] = (lat.masks_[i] >> e) & 1ULL;
        lat.classes_.push_back(canonicalize(edge_subforest(host, keep)));
        if (!lat.by_key_.emplace(lat.classes_.back().key, static_cast<int>(i)).second)
            throw NotCanonical("two minimal edge sets give the same model");
        lat.by_mask_.emplace(lat.masks_[i], static_cast<int>(i));
    }

    // longest chains via single-edge removals, in order of edge count
    std::vector<std::size_t> by_size(lat.masks_.size());
    std::iota(by_size.begin(), by_size.end(), 0);
    std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t a, std::size_t b) {
        return __builtin_popcountll(lat.masks_[a]) < __builtin_popcountll(lat.masks_[b]);
    });
    lat.depth_.assign(lat.masks_.size(), 0);
    for (std::size_t i : by_size) {
        const std::uint64_t m = lat.masks_[i];
        for (std::size_t e = 0; e < host.num_edges(); ++e) {
            if (!((m >> e) & 1ULL)) continue;
            const int child = lat.by_mask_.at(lat.steiner_mask(m & ~(1ULL << e)));
            lat.depth_[i] = std::max(lat.depth_[i], lat.depth_[static_cast<std::size_t>(child)] + 1);
        }
    }
    return lat;
}

}  // namespace lf
