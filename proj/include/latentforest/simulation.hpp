#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "latentforest/detail/parallel.hpp"
#include "latentforest/error.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/gaussian.hpp"
#include "latentforest/lattice.hpp"
#include "latentforest/selection.hpp"

namespace lf {

/**
 * Random trivalent tree on leaves "1".."m" by leaf attachment: start from
 * the 3-star, then repeatedly subdivide a uniform edge and hang the next
 * leaf from the new latent node.
 */
inline Forest random_trivalent_tree(int m, std::uint64_t seed) {
    if (m < 3) throw TooFewLeaves("a trivalent tree needs at least three leaves");
    std::mt19937_64 rng(seed);
    std::vector<Node> nodes;
    for (int i = 1; i <= m; ++i) nodes.push_back({std::to_string(i), false});
    auto add_latent = [&] {
        nodes.push_back({"h" + std::to_string(nodes.size() - static_cast<std::size_t>(m) + 1), true});
        return static_cast<int>(nodes.size()) - 1;
    };
    const int c = add_latent();
    std::vector<std::pair<int, int>> edges{{c, 0}, {c, 1}, {c, 2}};
    for (int leaf = 3; leaf < m; ++leaf) {
        std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
        const std::size_t e = pick(rng);
        const auto [x, y] = edges[e];
        const int h = add_latent();
        edges[e] = {x, h};
        edges.emplace_back(h, y);
        edges.emplace_back(h, leaf);
    }
    return make_forest(std::move(nodes), edges);
}

/// Uniform class among those of the given depth in the lattice.
inline CanonicalForest random_subforest_at_depth(const ModelLattice& lat, int depth, std::uint64_t seed) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < lat.size(); ++i)
        if (lat.depth(i) == depth) pool.push_back(i);
    if (pool.empty()) throw NoSuchDepth("no class at depth " + std::to_string(depth));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return lat[pool[pick(rng)]];
}

inline CanonicalForest random_subforest_at_depth(const Forest& t, int depth, std::uint64_t seed) {
    return random_subforest_at_depth(subforest_lattice(t), depth, seed);
}

/// Five-leaf tree with latent a, b, c and edges a1, a5, ab, b4, bc, c2, c3.
inline Forest five_leaf_tree() {
    return build_forest({{"1", false}, {"2", false}, {"3", false}, {"4", false}, {"5", false},
                         {"a", true}, {"b", true}, {"c", true}},
                        {{"a", "1"}, {"a", "5"}, {"a", "b"}, {"b", "4"}, {"b", "c"}, {"c", "2"}, {"c", "3"}});
}

/// Parameters on `host` equal to `corr` on the masked edges, 0 elsewhere, unit variances.
inline ModelParams masked_params(const Forest& host, std::uint64_t mask, double corr) {
    ModelParams p;
    p.leaf_var.assign(host.num_observed(), 1.0);
    for (std::size_t e = 0; e < host.num_edges(); ++e) p.edge_corr.push_back(((mask >> e) & 1ULL) ? corr : 0.0);
    return p;
}

enum class ExperimentKind { Lattice5, DepthComparison, Custom };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Lattice5;
    std::vector<std::size_t> n_values{125};
    int replicates = 100;
    std::uint64_t seed = 1;
    std::vector<int> tree_sizes{6, 8};  // depth comparison
    double corr = 0.6;
    EmConfig em{};
    unsigned threads = 1;
    // custom: host tree and the edge mask carrying `corr` in the truth
    Forest host;
    std::uint64_t truth_mask = 0;

    void validate() const {
        if (replicates < 1) throw InvalidArgument("replicates must be at least 1");
        if (n_values.empty()) throw InvalidArgument("need at least one sample size");
        for (std::size_t i = 0; i < n_values.size(); ++i)
            if (n_values[i] < 1 || (i && n_values[i] <= n_values[i - 1]))
                throw InvalidArgument("sample sizes must be positive and increasing");
        if (!(std::abs(corr) < 1)) throw InvalidArgument("edge correlation must lie in (-1, 1)");
        em.validate();
    }
};

/// One output row: how often `criterion` picked `label` at sample size n.
struct FrequencyRow {
    std::size_t n = 0;
    int tree_size = 0;
    std::string criterion;
    std::string label;
    int count = 0;
    int total = 0;
};

struct ExperimentResult {
    std::vector<FrequencyRow> rows;
    std::vector<std::string> labels;  // class codes for lattice runs
    std::size_t truth = 0;            // index of the true class for lattice runs
    /// counts[n index][criterion 0=bic,1=sbic][class]
    std::vector<std::array<std::vector<int>, 2>> counts;
};

namespace detail {

inline ExperimentResult run_lattice_experiment(const ExperimentConfig& cfg, const Forest& host, std::uint64_t mask) {
    const ModelLattice lat = subforest_lattice(host);
    const Eigen::MatrixXd sigma = covariance(host, masked_params(host, mask, cfg.corr));
    const auto ids = host.observed_ids();
    ExperimentResult res;
    for (std::size_t i = 0; i < lat.size(); ++i) res.labels.push_back(lat.code(i));
    res.truth = lat.class_of_edges(mask);
    for (std::size_t i = 0; i < lat.size(); ++i)
        for (std::size_t j = 0; j < lat.size(); ++j)
            if (lat.leq(i, j)) (void)lat.pair_rlct(i, j);  // warm the cache before going parallel

    for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
        const std::size_t n = cfg.n_values[ni];
        const auto reps = static_cast<std::size_t>(cfg.replicates);
        std::vector<std::size_t> pick_bic(reps), pick_sbic(reps);
        parallel_for(reps, cfg.threads, [&](std::size_t r) {
            const std::uint64_t s = derive_seed(cfg.seed, ni * 1000003ULL + r);
            const SufficientStats st = suff_stats(sample_from_cov(sigma, n, s), ids);
            EmConfig em = cfg.em;
            em.seed = derive_seed(s, 7);
            em.threads = 1;
            const auto fits = fit_lattice(lat, st, em, 1);
            std::vector<double> ll;
            for (const auto& f : fits) ll.push_back(f.loglik);
            const Selection sel = score_lattice(lat, ll, n);
            pick_bic[r] = sel.best_bic;
            pick_sbic[r] = sel.best_sbic;
        });
        std::array<std::vector<int>, 2> c{std::vector<int>(lat.size(), 0), std::vector<int>(lat.size(), 0)};
        for (std::size_t r = 0; r < reps; ++r) {
            ++c[0][pick_bic[r]];
            ++c[1][pick_sbic[r]];
        }
        for (int k = 0; k < 2; ++k)
            for (std::size_t i = 0; i < lat.size(); ++i)
                res.rows.push_back({n, static_cast<int>(host.num_observed()), k == 0 ? "bic" : "sbic", res.labels[i],
                                    c[static_cast<std::size_t>(k)][i], cfg.replicates});
        res.counts.push_back(std::move(c));
    }
    return res;
}

inline ExperimentResult run_depth_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    for (std::size_t mi = 0; mi < cfg.tree_sizes.size(); ++mi) {
        const int m = cfg.tree_sizes[mi];
        const auto reps = static_cast<std::size_t>(cfg.replicates);
        // hits[rep][n][criterion]
        std::vector<std::vector<std::array<int, 2>>> hits(reps, std::vector<std::array<int, 2>>(cfg.n_values.size()));
        parallel_for(reps, cfg.threads, [&](std::size_t r) {
            const std::uint64_t s = derive_seed(cfg.seed, mi * 1000003ULL + r);
            const Forest tree = random_trivalent_tree(m, derive_seed(s, 1));
            const ModelLattice lat = subforest_lattice(tree);
            const CanonicalForest sub = random_subforest_at_depth(lat, (m - 1) / 2, derive_seed(s, 2));
            const std::size_t truth = static_cast<std::size_t>(lat.find(sub.key));
            const Eigen::MatrixXd sigma = covariance(tree, masked_params(tree, lat.mask(truth), cfg.corr));
            for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
                const std::size_t n = cfg.n_values[ni];
                const SufficientStats st =
                    suff_stats(sample_from_cov(sigma, n, derive_seed(s, 100 + ni)), tree.observed_ids());
                EmConfig em = cfg.em;
                em.seed = derive_seed(s, 200 + ni);
                em.threads = 1;
                const auto fits = fit_lattice(lat, st, em, 1);
                std::vector<double> ll;
                for (const auto& f : fits) ll.push_back(f.loglik);
                const Selection sel = score_lattice(lat, ll, n);
                hits[r][ni] = {sel.best_bic == truth ? 1 : 0, sel.best_sbic == truth ? 1 : 0};
            }
        });
        for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni)
            for (int k = 0; k < 2; ++k) {
                int c = 0;
                for (std::size_t r = 0; r < reps; ++r) c += hits[r][ni][static_cast<std::size_t>(k)];
                res.rows.push_back({cfg.n_values[ni], m, k == 0 ? "bic" : "sbic", "exact", c, cfg.replicates});
            }
    }
    return res;
}

}  // namespace detail

/**
 * Lattice5: truth is the five-leaf tree with all correlations `corr` except
 * edge c3 (set to 0), exhaustive selection per replicate. DepthComparison:
 * random trees and middle-depth subforests, exact-recovery counts. Custom:
 * like Lattice5 on cfg.host with cfg.truth_mask.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    switch (cfg.kind) {
        case ExperimentKind::Lattice5: {
            const Forest host = five_leaf_tree();
            return detail::run_lattice_experiment(cfg, host, 0b0111111ULL);
        }
        case ExperimentKind::Custom:
            return detail::run_lattice_experiment(cfg, cfg.host, cfg.truth_mask);
        case ExperimentKind::DepthComparison:
            return detail::run_depth_experiment(cfg);
    }
    throw InvalidArgument("unknown experiment kind");
}

}  // namespace lf
