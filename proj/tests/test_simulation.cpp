#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace lf;

TEST(RandomTree, Shape) {
    for (int m = 3; m <= 10; ++m) {
        const Forest t = random_trivalent_tree(m, 100 + static_cast<std::uint64_t>(m));
        EXPECT_EQ(t.num_observed(), static_cast<std::size_t>(m));
        EXPECT_EQ(t.num_latent(), static_cast<std::size_t>(m - 2));
        EXPECT_EQ(t.num_edges(), static_cast<std::size_t>(2 * m - 3));
        for (std::size_t i = 0; i < t.num_nodes(); ++i)
            EXPECT_EQ(t.degree(static_cast<int>(i)), t.is_latent(static_cast<int>(i)) ? 3 : 1);
    }
    EXPECT_EQ(canonicalize(random_trivalent_tree(3, 9)).key, canonicalize(fx::star(3)).key);
    EXPECT_EQ(canonicalize(random_trivalent_tree(7, 5)).key, canonicalize(random_trivalent_tree(7, 5)).key);
    EXPECT_THROW(random_trivalent_tree(2, 1), TooFewLeaves);
}

TEST(RandomTree, SeedsGiveDifferentTopologies) {
    std::set<std::string> keys;
    for (std::uint64_t s = 0; s < 30; ++s) keys.insert(canonicalize(random_trivalent_tree(6, s)).key);
    EXPECT_GT(keys.size(), 5u);
}

TEST(SubforestAtDepth, Draws) {
    const Forest t = five_leaf_tree();
    const auto lat = subforest_lattice(t);
    EXPECT_EQ(random_subforest_at_depth(lat, 0, 1).key, lat[0].key);
    EXPECT_EQ(random_subforest_at_depth(lat, 4, 1).key, lat[lat.top()].key);
    // the depth-2 set from the partition oracle: partitions with exactly three blocks
    const auto pl = fx::partition_lattice(t);
    std::set<std::vector<int>> depth2;
    for (std::size_t i = 0; i < pl.parts.size(); ++i)
        if (pl.depth[i] == 2) depth2.insert(pl.parts[i]);
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const CanonicalForest c = random_subforest_at_depth(t, 2, s);
        const int i = lat.find(c.key);
        ASSERT_GE(i, 0);
        EXPECT_TRUE(depth2.count(fx::leaf_partition(t, lat.mask(static_cast<std::size_t>(i)))));
        seen.insert(c.key);
    }
    EXPECT_EQ(seen.size(), depth2.size());
    EXPECT_THROW(random_subforest_at_depth(lat, 5, 1), NoSuchDepth);
}

TEST(Experiment, SingleReplicateSumsToOne) {
    ExperimentConfig cfg;
    cfg.replicates = 1;
    cfg.n_values = {50};
    const ExperimentResult r = run_experiment(cfg);
    ASSERT_EQ(r.counts.size(), 1u);
    for (int k = 0; k < 2; ++k) {
        int sum = 0;
        for (int c : r.counts[0][static_cast<std::size_t>(k)]) sum += c;
        EXPECT_EQ(sum, 1);
    }
    EXPECT_EQ(r.labels.size(), 34u);
    EXPECT_EQ(r.labels[r.truth], "1111110");
    EXPECT_EQ(r.rows.size(), 68u);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
    ExperimentConfig cfg;
    cfg.replicates = 6;
    cfg.n_values = {40, 80};
    cfg.seed = 77;
    cfg.threads = 1;
    const ExperimentResult a = run_experiment(cfg);
    cfg.threads = 3;
    const ExperimentResult b = run_experiment(cfg);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Experiment, CustomHost) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Custom;
    cfg.host = fx::quartet();
    cfg.truth_mask = 0b00011;  // 1-a, 2-a
    cfg.replicates = 4;
    cfg.n_values = {2000};
    cfg.corr = 0.8;
    const ExperimentResult r = run_experiment(cfg);
    EXPECT_EQ(r.labels.size(), 13u);
    EXPECT_EQ(r.counts[0][1][r.truth], 4);
}

TEST(Experiment, DepthComparisonPopulationScale) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::DepthComparison;
    cfg.tree_sizes = {5};
    cfg.replicates = 3;
    cfg.n_values = {100000};
    cfg.corr = 0.8;
    const ExperimentResult r = run_experiment(cfg);
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto& row : r.rows) EXPECT_EQ(row.count, 3) << row.criterion;
}

TEST(Experiment, ConfigValidation) {
    ExperimentConfig cfg;
    cfg.replicates = 0;
    EXPECT_THROW(run_experiment(cfg), InvalidArgument);
    cfg.replicates = 1;
    cfg.n_values = {100, 50};
    EXPECT_THROW(run_experiment(cfg), InvalidArgument);
}

TEST(Laplace, GaussLegendreExactForPolynomials) {
    for (int order : {5, 8}) {
        const auto g = detail::gauss_legendre(order);
        double s = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], 6);
        EXPECT_NEAR(s, 2.0 / 7.0, 1e-14);
    }
}

TEST(Laplace, RegularModels) {
    for (int d = 1; d <= 3; ++d) {
        MonomialSos s;
        s.dim = d;
        for (int i = 0; i < d; ++i) {
            std::vector<int> u(static_cast<std::size_t>(d), 0);
            u[static_cast<std::size_t>(i)] = 1;
            s.terms.push_back({u, 0.0});
        }
        s.domain.assign(static_cast<std::size_t>(d), Interval{-1, 1});
        const LaplaceEstimate e = laplace_rlct_estimate(s);
        EXPECT_NEAR(e.lambda_hat, d, 0.1 * d);
        EXPECT_EQ(e.mult_hat, 1);
    }
}

TEST(Laplace, OneDimensionalClosedForm) {
    // Z_n = sqrt(pi/n) erf(sqrt n) for w^2 on [-1, 1]
    const LaplaceEstimate e =
        laplace_rlct_estimate([](const std::vector<double>& w) { return w[0] * w[0]; }, {Interval{-1, 1}});
    for (std::size_t i = 0; i < e.n_grid.size(); ++i) {
        const double n = e.n_grid[i];
        EXPECT_NEAR(e.log_z[i], std::log(std::sqrt(std::numbers::pi / n) * std::erf(std::sqrt(n))), 1e-6);
    }
    EXPECT_NEAR(e.lambda_hat, 1.0, 0.02);
    EXPECT_EQ(e.mult_hat, 1);
}

TEST(Laplace, CrossProduct) {
    MonomialSos s;
    s.dim = 2;
    s.terms.push_back({{1, 1}, 0.0});
    s.domain.assign(2, Interval{0, 1});
    const LaplaceEstimate e = laplace_rlct_estimate(s);
    EXPECT_GE(e.lambda_hat, 0.85);
    EXPECT_LE(e.lambda_hat, 1.15);
    EXPECT_EQ(e.mult_hat, 2);
}

TEST(Laplace, ThreeStarIdentityQuadrature) {
    MonomialSos h = h_q_system(fx::star(3), Eigen::MatrixXd::Identity(3, 3));
    for (int v = 0; v < 3; ++v) h.domain[static_cast<std::size_t>(v)] = Interval{0, 2};
    const LaplaceEstimate e = laplace_rlct_estimate(h);
    EXPECT_NEAR(e.lambda_hat, 4.5, 0.2 * 4.5);
}

TEST(Laplace, MonteCarloReportsErrors) {
    MonomialSos s;
    s.dim = 2;
    s.terms = {{{1, 0}, 0.0}, {{0, 1}, 0.0}};
    s.domain.assign(2, Interval{-1, 1});
    LaplaceConfig cfg;
    cfg.method = IntegrationMethod::MonteCarlo;
    cfg.mc_points = 200000;
    cfg.seed = 4;
    const LaplaceEstimate e = laplace_rlct_estimate(s, default_n_grid(), cfg);
    EXPECT_EQ(e.std_error.size(), e.n_grid.size());
    EXPECT_NEAR(e.lambda_hat, 2.0, 0.2);
    const LaplaceEstimate again = laplace_rlct_estimate(s, default_n_grid(), cfg);
    EXPECT_EQ(e.log_z, again.log_z);
}

TEST(Laplace, Errors) {
    MonomialSos s;
    s.dim = 1;
    s.terms = {{{1}, 0.0}};
    s.domain = {Interval{}};
    EXPECT_THROW(laplace_rlct_estimate(s), InvalidArgument);
    std::vector<Interval> big(7, Interval{-1, 1});
    EXPECT_THROW(laplace_rlct_estimate([](const std::vector<double>&) { return 0.0; }, big), InvalidArgument);
}
