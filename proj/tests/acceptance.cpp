// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"

using namespace lf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

MonomialSos sos_from(const std::vector<std::vector<int>>& u, const std::vector<double>& c, Interval dom) {
    MonomialSos s;
    s.dim = static_cast<int>(u.at(0).size());
    for (std::size_t i = 0; i < u.size(); ++i) s.terms.push_back({u[i], c[i]});
    s.domain.assign(static_cast<std::size_t>(s.dim), dom);
    return s;
}

Outcome quartet_rlct() {
    const Forest host = fx::quartet(), qf = fx::quartet_qf();
    const Rlct r = rlct_forest_pair(host, qf);
    const int reps = 1000;
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) (void)rlct_forest_pair(host, qf);
    const double us = 1e6 * seconds_since(t0) / reps;
    return {r == Rlct{Rational(13, 2), 1} && us < 1000.0, r.str() + ", " + fmt(us, 3) + " us per call"};
}

Outcome two_leaf() {
    const Rlct r = rlct_forest_pair(fx::path_1a2(), fx::empty_on({"1", "2"}));
    return {r == Rlct{Rational(3), 2}, r.str()};
}

Outcome engine_golden() {
    bool ok = true;
    std::string bad;
    const Rlct cross = rlct_monomial_sos(sos_from({{1, 1}}, {0.0}, {0, 1}));
    if (!(cross == Rlct{Rational(1), 2})) ok = false, bad += " cross:" + cross.str();
    for (int d = 1; d <= 6; ++d) {
        std::vector<std::vector<int>> u;
        for (int i = 0; i < d; ++i) {
            u.emplace_back(static_cast<std::size_t>(d), 0);
            u.back()[static_cast<std::size_t>(i)] = 1;
        }
        const Rlct r = rlct_monomial_sos(sos_from(u, std::vector<double>(static_cast<std::size_t>(d), 0.0), {-1, 1}));
        if (!(r == Rlct{Rational(d), 1})) ok = false, bad += " d=" + std::to_string(d) + ":" + r.str();
    }
    const Rlct mixed = rlct_monomial_sos(
        sos_from({{1, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 1, 0}, {0, 0, 1, 1}}, {1, 0, 0, 0}, {-2, 2}));
    if (!(mixed == Rlct{Rational(2), 1})) ok = false, bad += " mixed:" + mixed.str();
    return {ok, ok ? "cross product (1,2), sums of squares (d,1) for d=1..6, mixed system (2,1)" : "mismatch:" + bad};
}

Outcome closed_vs_engine() {
    const auto t0 = Clock::now();
    int pairs = 0, mismatches = 0;
    std::string first_bad;
    for (const Forest& host : {fx::quartet(), fx::star(3), five_leaf_tree()}) {
        const auto lat = subforest_lattice(host);
        for (std::size_t j = 0; j < lat.size(); ++j)
            for (std::size_t i = 0; i < lat.size(); ++i) {
                if (!lat.leq(i, j)) continue;
                const Forest& sup = lat[j].forest;
                const Forest qf = steiner_subforest(sup, lat[i]);
                const Rlct closed = rlct_forest_pair(sup, qf);
                Rlct engine{Rational(model_dimension(qf)), 1};
                const MonomialSos z = zero_part_monomials(sup, qf);
                if (!z.terms.empty()) {
                    const Rlct r0 = rlct_monomial_sos(z);
                    engine = Rlct{engine.lambda + r0.lambda, r0.mult};
                }
                ++pairs;
                if (!(closed == engine)) {
                    ++mismatches;
                    if (first_bad.empty()) first_bad = lat.code(i) + "<=" + lat.code(j) + ": " + closed.str() + " vs " + engine.str();
                }
            }
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < 30.0,
            std::to_string(pairs) + " pairs, " + std::to_string(mismatches) + " mismatches, " + fmt(s, 3) + " s" +
                (first_bad.empty() ? "" : "; first: " + first_bad)};
}

Outcome lattice_count() {
    const auto lat = subforest_lattice(five_leaf_tree());
    return {lat.size() == 34 && lat.max_depth() == 4,
            std::to_string(lat.size()) + " classes, max depth " + std::to_string(lat.max_depth())};
}

Outcome path_monomials() {
    std::mt19937_64 rng(20240611);
    int ok_b1 = 0, ok_b2 = 0, ok_pendant = 0;
    const int trees = 50;
    const auto t0 = Clock::now();
    std::string first_bad;
    for (int i = 0; i < trees; ++i) {
        const int m = 3 + i % 6;
        const Forest t = random_trivalent_tree(m, rng());
        const auto [t1, m1] = one_distance_mult(newton_facets(fx::path_exponents(t)));
        if (t1 == Rational(2, m) && m1 == 1)
            ++ok_b1;
        else if (first_bad.empty())
            first_bad = "m=" + std::to_string(m) + " t=" + t1.str() + " mult=" + std::to_string(m1);
        const int k = 1 + i % 3;
        const Forest s = fx::subdivide(t, k, rng);
        const auto [t2, m2] = one_distance_mult(newton_facets(fx::path_exponents(s)));
        ok_pendant += t2 == Rational(2, m) && m2 == 1 + fx::pendant_degree_two(s);
        if (t2 == Rational(2, m) && m2 == 1 + k)
            ++ok_b2;
        else if (first_bad.empty())
            first_bad = "m=" + std::to_string(m) + " k=" + std::to_string(k) + " t=" + t2.str() + " mult=" + std::to_string(m2);
    }
    return {ok_b1 == trees && ok_b2 == trees,
            "trivalent " + std::to_string(ok_b1) + "/" + std::to_string(trees) + ", with degree-2 nodes " +
                std::to_string(ok_b2) + "/" + std::to_string(trees) + " (mult = 1 + pendant degree-2 nodes holds " +
                std::to_string(ok_pendant) + "/" + std::to_string(trees) + "), " + fmt(seconds_since(t0), 3) + " s" +
                (first_bad.empty() ? "" : "; first failure " + first_bad)};
}

Outcome em_correctness() {
    std::mt19937_64 rng(7);
    int monotone = 0;
    double worst_drop = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Forest t = random_trivalent_tree(3 + i % 4, rng());
        const Eigen::MatrixXd sigma = covariance(t, fx::random_params(t, rng));
        const SufficientStats st = suff_stats(sample_from_cov(sigma, 100 + 50 * static_cast<std::size_t>(i % 5), rng()),
                                              t.observed_ids());
        EmConfig cfg;
        cfg.restarts = 1;
        cfg.seed = rng();
        const EmResult r = em_fit(t, st, cfg);
        bool ok = true;
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            worst_drop = std::max(worst_drop, r.trace[k - 1] - r.trace[k]);
            ok = ok && r.trace[k] >= r.trace[k - 1] - 1e-9;
        }
        monotone += ok;
    }

    const Forest s3 = fx::star(3);
    const Eigen::MatrixXd sigma = covariance(s3, ModelParams{{1, 1, 1}, {0.5, 0.6, 0.7}});
    EmConfig cfg;
    cfg.rel_tol = 1e-15;
    cfg.max_iter = 100000;
    const EmResult r = em_fit(s3, suff_stats_from_cov(sigma, 1000, s3.observed_ids()), cfg);
    const double cov_err = (covariance(s3, r.params) - sigma).cwiseAbs().maxCoeff();
    const double target = std::sqrt(sigma(0, 1) * sigma(0, 2) / sigma(1, 2));
    const double w_err = std::abs(std::abs(r.params.edge_corr[static_cast<std::size_t>(s3.find_edge("a", "1"))]) - target);
    return {monotone == 100 && cov_err <= 1e-6 && w_err <= 1e-4,
            "monotone " + std::to_string(monotone) + "/100 (largest drop " + fmt(worst_drop, 3) +
                "), covariance error " + fmt(cov_err, 3) + ", |w_a1| error " + fmt(w_err, 3) + " after " +
                std::to_string(r.iterations) + " iterations"};
}

Outcome sbic_checks() {
    using Big = boost::multiprecision::cpp_dec_float_50;
    const Forest t = five_leaf_tree();
    const auto lat = subforest_lattice(t);
    const SufficientStats st =
        suff_stats(sample_from_cov(covariance(t, masked_params(t, 0x3F, 0.6)), 125, 2024), t.observed_ids());
    const auto fits = fit_lattice(lat, st, EmConfig{});
    std::vector<double> ll;
    for (const auto& f : fits) ll.push_back(f.loglik);
    const Selection sel = score_lattice(lat, ll, st.n);
    const bool base = sel.table[0].sbic == sel.table[0].bic;
    int above = 0;
    // ties (every pair coefficient equal to the dimension) land within an ulp either side
    for (const auto& row : sel.table) above += row.sbic >= row.bic - 1e-12 * std::abs(row.bic);

    // toy poset 0 < {1, 2} < 3 < 4 with made-up learning coefficients
    const std::vector<std::vector<int>> below{{}, {0}, {0}, {0, 1, 2}, {0, 1, 2, 3}};
    const int dims[] = {3, 4, 5, 7, 9};
    auto rl = [&](std::size_t i, std::size_t j) {
        if (i == j) return Rlct{Rational(dims[j]), 1};
        return Rlct{Rational(2 * dims[i] + dims[j], 3), 1 + static_cast<int>((i + j) % 2)};
    };
    const std::size_t n = 5000;
    const std::vector<double> toy_ll{-100040.0, -100012.5, -100020.0, -100001.0, -99999.5};
    const auto got = sbic_scores(
        {0, 1, 2, 3, 4},
        [&](std::size_t i, std::size_t j) {
            return std::find(below[j].begin(), below[j].end(), static_cast<int>(i)) != below[j].end();
        },
        rl, toy_ll, n);
    // direct solve with 50 significant digits
    const Big ln = boost::multiprecision::log(Big(n));
    auto lprime = [&](std::size_t i, std::size_t j) {
        const Rlct r = rl(i, j);
        return boost::multiprecision::exp(Big(toy_ll[j]) - Big(r.lambda.num()) / Big(r.lambda.den()) / 2 * ln +
                                          (r.mult - 1) * boost::multiprecision::log(ln));
    };
    std::vector<Big> x(5);
    double worst = 0.0;
    for (std::size_t f = 0; f < 5; ++f) {
        Big b = -lprime(f, f), c = 0;
        for (int g : below[f]) {
            b += x[static_cast<std::size_t>(g)];
            c += lprime(static_cast<std::size_t>(g), f) * x[static_cast<std::size_t>(g)];
        }
        x[f] = (-b + boost::multiprecision::sqrt(b * b + 4 * c)) / 2;
        const double want = static_cast<double>(boost::multiprecision::log(x[f]));
        worst = std::max(worst, std::abs(got[f] - want) / std::abs(want));
    }
    return {base && above == 34 && worst <= 1e-8,
            std::string("empty forest sBIC == BIC: ") + (base ? "yes" : "no") + ", sBIC >= BIC (to 1e-12 relative) for " +
                std::to_string(above) + "/34 classes, toy lattice worst relative error " + fmt(worst, 3)};
}

Outcome simulation_trend() {
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Lattice5;
    cfg.n_values = {125};
    cfg.replicates = 100;
    cfg.seed = 1;
    const ExperimentResult r = run_experiment(cfg);
    const auto& bic_counts = r.counts[0][0];
    const auto& sbic_counts = r.counts[0][1];
    const std::size_t modal =
        static_cast<std::size_t>(std::max_element(bic_counts.begin(), bic_counts.end()) - bic_counts.begin());
    const auto lat = subforest_lattice(five_leaf_tree());
    const bool strict_sub = modal != r.truth && lat.leq(modal, r.truth);
    const double s = seconds_since(t0);
    return {sbic_counts[r.truth] > bic_counts[r.truth] && strict_sub && s < 600.0,
            "model 13 chosen by sBIC " + std::to_string(sbic_counts[r.truth]) + "/100, by BIC " +
                std::to_string(bic_counts[r.truth]) + "/100; BIC mode " + r.labels[modal] + " (model " +
                std::to_string(modal + 1) + ", " + std::to_string(bic_counts[modal]) + " times)" +
                (strict_sub ? " is a strict submodel" : " is NOT a strict submodel") + "; " + fmt(s, 3) + " s"};
}

Outcome laplace_oracle() {
    const auto t0 = Clock::now();
    const LaplaceEstimate cross = laplace_rlct_estimate(sos_from({{1, 1}}, {0.0}, {0, 1}));
    MonomialSos h = h_q_system(fx::star(3), Eigen::MatrixXd::Identity(3, 3));
    for (int v = 0; v < 3; ++v) h.domain[static_cast<std::size_t>(v)] = Interval{0, 2};
    LaplaceConfig mc;
    mc.method = IntegrationMethod::MonteCarlo;
    mc.seed = 11;
    const LaplaceEstimate star = laplace_rlct_estimate(h, default_n_grid(), mc);
    const double s = seconds_since(t0);
    const bool ok = cross.lambda_hat >= 0.85 && cross.lambda_hat <= 1.15 && cross.mult_hat == 2 &&
                    std::abs(star.lambda_hat - 4.5) <= 0.2 * 4.5 && s < 300.0;
    return {ok, "cross product lambda " + fmt(cross.lambda_hat) + " mult " + std::to_string(cross.mult_hat) +
                    "; 3-star identity lambda " + fmt(star.lambda_hat) + " (target 9/2); " + fmt(s, 3) + " s"};
}

Outcome property_suites() {
    std::mt19937_64 rng(4242);
    const int cases = 100;
    int idem = 0, order = 0, steiner = 0, perm = 0;

    for (int i = 0; i < cases; ++i) {
        const Forest t = random_trivalent_tree(3 + i % 7, rng());
        const Forest s = fx::subdivide(t, i % 4, rng);
        std::vector<bool> keep(s.num_edges());
        for (std::size_t e = 0; e < keep.size(); ++e) keep[e] = rng() % 3 != 0;
        const Forest f = edge_subforest(s, keep);
        const CanonicalForest c1 = canonicalize(f);
        const CanonicalForest c2 = canonicalize(c1.forest);
        const CanonicalForest c3 = canonicalize(fx::relabel(f, {}, rng));
        idem += c1.key == c2.key && c1.key == c3.key && c2.forest.num_edges() == c1.forest.num_edges() &&
                is_canonical_shape(c1.forest);
    }

    for (int i = 0; i < cases; ++i) {
        const Forest t = random_trivalent_tree(4 + i % 5, rng());
        const auto lat = subforest_lattice(t);
        const std::uint64_t full = (1ULL << t.num_edges()) - 1;
        const std::uint64_t b = rng() & full, a = b & rng();
        auto cls = [&](std::uint64_t m) {
            std::vector<bool> keep(t.num_edges());
            for (std::size_t e = 0; e < keep.size(); ++e) keep[e] = (m >> e) & 1ULL;
            return lat.find(canonicalize(edge_subforest(t, keep)).key);
        };
        const int ca = cls(a), cb = cls(b);
        order += ca >= 0 && cb >= 0 && lat.leq(static_cast<std::size_t>(ca), static_cast<std::size_t>(cb));
    }

    for (int i = 0; i < cases; ++i) {
        const Forest t = random_trivalent_tree(3 + i % 6, rng());
        const auto lat = subforest_lattice(t);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, lat.size() - 1)(rng);
        steiner += canonicalize(steiner_subforest(t, lat[k])).key == lat[k].key;
    }

    for (int i = 0; i < cases; ++i) {
        const Forest host = i % 2 ? fx::quartet() : fx::star(3);
        const auto lat = subforest_lattice(host);
        const std::size_t truth = std::uniform_int_distribution<std::size_t>(0, lat.size() - 1)(rng);
        ModelParams p = fx::random_params(host, rng, 0.4, 0.8);
        for (std::size_t e = 0; e < host.num_edges(); ++e)
            if (!((lat.mask(truth) >> e) & 1ULL)) p.edge_corr[e] = 0.0;
        const auto ids = host.observed_ids();
        const Eigen::MatrixXd x = sample_from_cov(covariance(host, p), 300, rng());

        std::vector<std::string> shuffled = ids;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::map<std::string, std::string> fwd, back;
        for (std::size_t v = 0; v < ids.size(); ++v) {
            fwd[ids[v]] = "x" + shuffled[v];
            back["x" + shuffled[v]] = ids[v];
        }
        const Forest host2 = fx::relabel(host, fwd, rng);
        std::vector<int> cols(ids.size());
        std::iota(cols.begin(), cols.end(), 0);
        std::shuffle(cols.begin(), cols.end(), rng);
        Eigen::MatrixXd y(x.rows(), x.cols());
        std::vector<std::string> ids2;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            y.col(static_cast<Eigen::Index>(c)) = x.col(cols[c]);
            ids2.push_back(fwd[ids[static_cast<std::size_t>(cols[c])]]);
        }
        const Selection s1 = select_exhaustive(host, suff_stats(x, ids));
        const Selection s2 = select_exhaustive(host2, suff_stats(y, ids2));
        auto same = [&](std::size_t a, std::size_t b) {
            return canonicalize(fx::relabel(s2.lattice[b].forest, back, rng)).key == s1.lattice[a].key;
        };
        perm += same(s1.best_bic, s2.best_bic) && same(s1.best_sbic, s2.best_sbic);
    }

    const bool ok = idem == cases && order == cases && steiner == cases && perm == cases;
    auto frac = [&](int k) { return std::to_string(k) + "/" + std::to_string(cases); };
    return {ok, "idempotence " + frac(idem) + ", order soundness " + frac(order) + ", steiner round trip " +
                    frac(steiner) + ", permutation equivariance " + frac(perm)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"quartet RLCT is (13/2, 1)", quartet_rlct},
        {"two-leaf path RLCT is (3, 2)", two_leaf},
        {"engine golden values", engine_golden},
        {"closed form equals engine on all lattice pairs", closed_vs_engine},
        {"five-leaf lattice: 34 classes, depth 4", lattice_count},
        {"path-monomial 1-distance and multiplicity", path_monomials},
        {"EM monotonicity and population recovery", em_correctness},
        {"sBIC base case, bound and extended-precision check", sbic_checks},
        {"simulation trend at n = 125", simulation_trend},
        {"Laplace integral oracle", laplace_oracle},
        {"property suites", property_suites},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%2zu] %s -- %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
