#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "latentforest/detail/parallel.hpp"
#include "latentforest/error.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/forest_rlct.hpp"
#include "latentforest/gaussian.hpp"
#include "latentforest/lattice.hpp"

namespace lf {

enum class Criterion { Bic, Sbic };

inline double bic(double loglik_hat, int dim, std::size_t n) {
    if (n < 1) throw InvalidArgument("n must be positive");
    return loglik_hat - 0.5 * dim * std::log(static_cast<double>(n));
}

/// log L' = loglik - (lambda/2) log n + (m - 1) log log n.
inline double log_lprime(const Rlct& r, double loglik_hat_sup, std::size_t n) {
    const double ln = std::log(static_cast<double>(n));
    double v = loglik_hat_sup - 0.5 * r.lambda.to_double() * ln;
    if (r.mult > 1) v += (r.mult - 1) * std::log(ln);
    return v;
}

inline double log_lprime(const ModelLattice& lat, std::size_t sub, std::size_t sup, double loglik_hat_sup,
                         std::size_t n) {
    return log_lprime(lat.pair_rlct(sub, sup), loglik_hat_sup, n);
}

namespace detail {

inline double log_sum_exp(const std::vector<double>& xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

/**
 * log of the positive root of x^2 + x (sum_j x_j - L) - sum_j L_j x_j = 0
 * given log L, log x_j and log L_j, evaluated after removing a common shift.
 */
inline double sbic_root(double log_l_self, const std::vector<double>& log_x_below,
                        const std::vector<double>& log_l_below) {
    if (log_x_below.empty()) return log_l_self;
    double K = log_l_self;
    for (std::size_t j = 0; j < log_x_below.size(); ++j)
        K = std::max({K, log_x_below[j], 0.5 * (log_l_below[j] + log_x_below[j])});
    double b = -std::exp(log_l_self - K);
    std::vector<double> logc;
    for (std::size_t j = 0; j < log_x_below.size(); ++j) {
        b += std::exp(log_x_below[j] - K);
        logc.push_back(log_l_below[j] + log_x_below[j] - 2.0 * K);
    }
    const double lc = log_sum_exp(logc);
    const double c = std::exp(lc);
    const double disc = std::sqrt(b * b + 4.0 * c);
    if (b >= 0) return K + std::log(2.0) + lc - std::log(b + disc);
    return K + std::log(0.5 * (disc - b));
}

}  // namespace detail

/**
 * Singular BIC for every model of a finite poset. `order` is a linear
 * extension (every model after all models below it); `below(i, j)` means
 * model i is strictly contained in model j and `rlct(i, j)` gives the
 * learning coefficient of model j at a truth in model i (i == j allowed).
 */
inline std::vector<double> sbic_scores(const std::vector<std::size_t>& order,
                                       const std::function<bool(std::size_t, std::size_t)>& below,
                                       const std::function<Rlct(std::size_t, std::size_t)>& rlct,
                                       const std::vector<double>& loglik, std::size_t n) {
    std::vector<double> out(loglik.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t a = 0; a < order.size(); ++a) {
        const std::size_t f = order[a];
        std::vector<double> lx, ll;
        for (std::size_t b = 0; b < a; ++b) {
            const std::size_t g = order[b];
            if (!below(g, f)) continue;
            lx.push_back(out[g]);
            ll.push_back(log_lprime(rlct(g, f), loglik[f], n));
        }
        out[f] = detail::sbic_root(log_lprime(rlct(f, f), loglik[f], n), lx, ll);
    }
    return out;
}

/// sBIC over a subforest lattice; classes are already in a linear extension.
inline std::vector<double> sbic_all(const ModelLattice& lat, const std::vector<double>& loglik, std::size_t n) {
    if (loglik.size() != lat.size()) throw InvalidArgument("one log-likelihood per class required");
    std::vector<std::size_t> order(lat.size());
    std::iota(order.begin(), order.end(), 0);
    return sbic_scores(
        order, [&](std::size_t i, std::size_t j) { return i != j && lat.leq(i, j); },
        [&](std::size_t i, std::size_t j) { return lat.pair_rlct(i, j); }, loglik, n);
}

struct ClassScore {
    std::string key;
    std::string code;
    int dim = 0;
    double loglik = 0.0;
    double bic = 0.0;
    double sbic = 0.0;
    ModelParams params;
    bool converged = true;
};

namespace detail {

/// Best entry by score; ties go to smaller dimension, then smaller hash.
inline std::size_t argmax_score(const std::vector<ClassScore>& rows, const std::vector<std::uint64_t>& hashes,
                                Criterion crit) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double a = crit == Criterion::Bic ? rows[i].bic : rows[i].sbic;
        const double b = crit == Criterion::Bic ? rows[best].bic : rows[best].sbic;
        if (a > b || (a == b && (rows[i].dim < rows[best].dim ||
                                 (rows[i].dim == rows[best].dim && hashes[i] < hashes[best]))))
            best = i;
    }
    return best;
}

}  // namespace detail

struct Selection {
    ModelLattice lattice;
    std::vector<ClassScore> table;
    std::size_t best_bic = 0;
    std::size_t best_sbic = 0;
    std::size_t selected(Criterion c) const { return c == Criterion::Bic ? best_bic : best_sbic; }
};

/// Scores already-fitted log-likelihoods over a lattice.
inline Selection score_lattice(ModelLattice lat, const std::vector<double>& loglik, std::size_t n) {
    Selection sel;
    const auto sb = sbic_all(lat, loglik, n);
    std::vector<std::uint64_t> hashes;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        ClassScore cs;
        cs.key = lat[i].key;
        cs.code = lat.code(i);
        cs.dim = model_dimension(lat[i].forest);
        cs.loglik = loglik[i];
        cs.bic = bic(loglik[i], cs.dim, n);
        cs.sbic = sb[i];
        sel.table.push_back(std::move(cs));
        hashes.push_back(lat[i].hash);
    }
    sel.best_bic = detail::argmax_score(sel.table, hashes, Criterion::Bic);
    sel.best_sbic = detail::argmax_score(sel.table, hashes, Criterion::Sbic);
    sel.lattice = std::move(lat);
    return sel;
}

/// Fits every class of the lattice by EM (seed per class derived from cfg.seed).
inline std::vector<EmResult> fit_lattice(const ModelLattice& lat, const SufficientStats& st, const EmConfig& cfg,
                                         unsigned threads = 1) {
    std::vector<EmResult> fits(lat.size());
    detail::parallel_for(lat.size(), threads, [&](std::size_t i) {
        EmConfig c = cfg;
        c.seed = detail::derive_seed(cfg.seed, i);
        c.threads = 1;
        fits[i] = em_fit(lat[i].forest, st, c);
    });
    return fits;
}

/// Exhaustive search over all subforest models of a canonical host.
inline Selection select_exhaustive(const Forest& host, const SufficientStats& st, const EmConfig& cfg = {},
                                   unsigned threads = 1) {
    ModelLattice lat = subforest_lattice(host);
    const auto fits = fit_lattice(lat, st, cfg, threads);
    std::vector<double> ll;
    for (const auto& f : fits) ll.push_back(f.loglik);
    Selection sel = score_lattice(std::move(lat), ll, st.n);
    for (std::size_t i = 0; i < fits.size(); ++i) {
        sel.table[i].params = fits[i].params;
        sel.table[i].converged = fits[i].converged;
    }
    return sel;
}

/**
 * Parameters for a canonical subforest `child` of `parent`, read off the
 * parent's parameters: each child edge gets the product of the parent
 * correlations along the corresponding parent path.
 */
inline ModelParams transfer_params(const Forest& parent, const ModelParams& pp, const CanonicalForest& child) {
    const detail::RootedForest rooted(parent);
    std::unordered_map<std::string, double> var;
    for (std::size_t i = 0; i < parent.num_observed(); ++i) var[parent.id(parent.observed()[i])] = pp.leaf_var[i];
    auto parent_index = [&](int ci) {
        const std::string& id = child.forest.id(ci);
        auto it = child.origin.find(id);
        const int pi = parent.index_of(it == child.origin.end() ? id : it->second);
        if (pi < 0) throw NotSubforest("node '" + id + "' has no counterpart in the parent");
        return pi;
    };
    ModelParams p;
    for (int v : child.forest.observed()) p.leaf_var.push_back(var.at(child.forest.id(v)));
    for (const Edge& e : child.forest.edges()) {
        double r = 1.0;
        for (int pe : rooted.path_edges(parent_index(e.u), parent_index(e.v))) r *= pp.edge_corr[static_cast<std::size_t>(pe)];
        p.edge_corr.push_back(r);
    }
    return p;
}

namespace detail {

/// Correlations of the observed block of S (in the order of `ids`).
inline Eigen::MatrixXd correlations_of(const Eigen::MatrixXd& S) {
    const Eigen::VectorXd d = S.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return d.asDiagonal() * S * d.asDiagonal();
}

inline Forest tree_from_edges(const std::vector<std::string>& leaves, int internal,
                              const std::vector<std::pair<int, int>>& edges) {
    std::unordered_map<std::string, int> taken;
    for (const auto& l : leaves) taken.emplace(l, 1);
    std::vector<Node> nodes;
    for (const auto& l : leaves) nodes.push_back({l, false});
    for (int h = 0; h < internal; ++h) {
        std::string id = "h" + std::to_string(h + 1);
        while (taken.count(id)) id = "_" + id;
        nodes.push_back({id, true});
    }
    return make_forest(std::move(nodes), edges);
}

}  // namespace detail

/**
 * Trivalent starting tree: neighbour joining on d = -log max(|r|, 1e-3),
 * then one sweep of nearest-neighbour interchanges kept when they raise the
 * EM log-likelihood.
 */
inline Forest initial_tree(const SufficientStats& st, const EmConfig& cfg = {}) {
    const Eigen::Index k = st.second_moment.rows();
    if (k < 3) throw TooFewLeaves("need at least three observed variables");
    std::vector<std::string> ids = st.ids;
    if (ids.empty())
        for (Eigen::Index i = 0; i < k; ++i) ids.push_back(std::to_string(i + 1));
    const Eigen::MatrixXd R = detail::correlations_of(st.second_moment);

    // neighbour joining; node ids 0..k-1 leaves, k.. internal
    std::vector<std::vector<double>> D(static_cast<std::size_t>(2 * k), std::vector<double>(static_cast<std::size_t>(2 * k), 0.0));
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                i == j ? 0.0 : -std::log(std::max(std::abs(R(i, j)), 1e-3));
    std::vector<int> active;
    for (Eigen::Index i = 0; i < k; ++i) active.push_back(static_cast<int>(i));
    std::vector<std::pair<int, int>> edges;
    int next = static_cast<int>(k);
    auto d = [&](int a, int b) -> double& { return D[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; };
    while (active.size() > 3) {
        const double r = static_cast<double>(active.size());
        std::vector<double> tot(active.size(), 0.0);
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = 0; b < active.size(); ++b) tot[a] += d(active[a], active[b]);
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double q = (r - 2.0) * d(active[a], active[b]) - tot[a] - tot[b];
                if (q < best - 1e-12) {
                    best = q;
                    bi = a;
                    bj = b;
                }
            }
        const int u = next++;
        const int x = active[bi], y = active[bj];
        edges.emplace_back(u, x);
        edges.emplace_back(u, y);
        for (int z : active)
            if (z != x && z != y) d(u, z) = d(z, u) = 0.5 * (d(x, z) + d(y, z) - d(x, y));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(u);
    }
    const int centre = next++;
    for (int z : active) edges.emplace_back(centre, z);
    const int internal = next - static_cast<int>(k);
    Forest tree = detail::tree_from_edges(ids, internal, edges);
    if (k == 3) return tree;

    SufficientStats stats = st;
    stats.ids = ids;
    auto score = [&](const Forest& f) { return em_fit(f, stats, cfg).loglik; };
    double current = score(tree);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [u, v] = edges[e];
        if (u < k || v < k) continue;
        std::vector<int> nu, nv;
        for (const auto& [a, b] : edges) {
            if (a == u && b != v) nu.push_back(b);
            if (b == u && a != v) nu.push_back(a);
            if (a == v && b != u) nv.push_back(b);
            if (b == v && a != u) nv.push_back(a);
        }
        if (nu.size() != 2 || nv.size() != 2) continue;
        for (int swap_with : {0, 1}) {
            auto cand = edges;
            const int bnode = nu[1], cnode = nv[static_cast<std::size_t>(swap_with)];
            for (auto& ed : cand) {
                if ((ed.first == u && ed.second == bnode) || (ed.second == u && ed.first == bnode)) ed = {u, cnode};
                else if ((ed.first == v && ed.second == cnode) || (ed.second == v && ed.first == cnode)) ed = {v, bnode};
            }
            Forest alt = detail::tree_from_edges(ids, internal, cand);
            const double s = score(alt);
            if (s > current + 1e-9 * std::abs(current)) {
                current = s;
                edges = std::move(cand);
                tree = std::move(alt);
                break;
            }
        }
    }
    return tree;
}

struct ChainResult {
    std::vector<CanonicalForest> chain;  // host first, empty forest last
    std::vector<ClassScore> scores;
    std::size_t selected_bic = 0;
    std::size_t selected_sbic = 0;
};

/**
 * Greedy decreasing chain from the host to the empty forest: at each step
 * the single-edge removal (canonicalized) with the best BIC is kept. BIC
 * and sBIC are then computed on the chain viewed as a totally ordered set.
 */
inline ChainResult pruned_chain(const Forest& host, const SufficientStats& st, const EmConfig& cfg = {}) {
    if (!is_canonical_shape(host)) throw NotCanonical("host has a latent node of degree <= 2");
    ChainResult res;
    CanonicalForest cur = canonicalize(host);
    EmConfig c0 = cfg;
    EmResult fit = em_fit(cur.forest, st, c0);
    auto make_score = [&](const CanonicalForest& cf, const EmResult& r) {
        ClassScore s;
        s.key = cf.key;
        s.dim = model_dimension(cf.forest);
        s.loglik = r.loglik;
        s.bic = bic(r.loglik, s.dim, st.n);
        s.params = r.params;
        s.converged = r.converged;
        return s;
    };
    res.chain.push_back(cur);
    res.scores.push_back(make_score(cur, fit));
    std::uint64_t step = 0;
    while (cur.forest.num_edges() > 0) {
        std::unordered_map<std::string, int> seen;
        std::vector<CanonicalForest> cands;
        for (std::size_t e = 0; e < cur.forest.num_edges(); ++e) {
            std::vector<bool> keep(cur.forest.num_edges(), true);
            keep[e] = false;
            CanonicalForest cf = canonicalize(edge_subforest(cur.forest, keep));
            if (seen.emplace(cf.key, 1).second) cands.push_back(std::move(cf));
        }
        std::vector<EmResult> fits(cands.size());
        std::vector<ClassScore> rows(cands.size());
        std::vector<std::uint64_t> hashes(cands.size());
        ++step;
        detail::parallel_for(cands.size(), cfg.threads, [&](std::size_t i) {
            EmConfig c = cfg;
            c.threads = 1;
            c.seed = detail::derive_seed(cfg.seed, step * 1000003ULL + i);
            const ModelParams warm = transfer_params(cur.forest, res.scores.back().params, cands[i]);
            fits[i] = em_fit(cands[i].forest, st, c, &warm);
            rows[i] = make_score(cands[i], fits[i]);
            hashes[i] = cands[i].hash;
        });
        const std::size_t pick = detail::argmax_score(rows, hashes, Criterion::Bic);
        cur = cands[pick];
        res.chain.push_back(cur);
        res.scores.push_back(rows[pick]);
    }

    // chain as a total order: index chain.size()-1 is the bottom
    const std::size_t len = res.chain.size();
    std::vector<std::size_t> order(len);
    for (std::size_t i = 0; i < len; ++i) order[i] = len - 1 - i;
    std::vector<double> ll;
    for (const auto& s : res.scores) ll.push_back(s.loglik);
    const auto sb = sbic_scores(
        order, [](std::size_t i, std::size_t j) { return i > j; },
        [&](std::size_t i, std::size_t j) {
            const Forest& sup = res.chain[j].forest;
            return rlct_forest_pair(sup, steiner_subforest(sup, res.chain[i]));
        },
        ll, st.n);
    std::vector<std::uint64_t> hashes;
    for (std::size_t i = 0; i < len; ++i) {
        res.scores[i].sbic = sb[i];
        hashes.push_back(res.chain[i].hash);
    }
    res.selected_bic = detail::argmax_score(res.scores, hashes, Criterion::Bic);
    res.selected_sbic = detail::argmax_score(res.scores, hashes, Criterion::Sbic);
    return res;
}

}  // namespace lf
