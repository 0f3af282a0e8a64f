#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "latentforest/detail/parallel.hpp"
#include "latentforest/error.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/monomial.hpp"

namespace lf {

/**
 * Parameters of a Gaussian latent forest model. `leaf_var` follows
 * forest.observed() and `edge_corr` follows forest.edges().
 */
struct ModelParams {
    std::vector<double> leaf_var;
    std::vector<double> edge_corr;
};

inline void validate_params(const Forest& f, const ModelParams& p) {
    if (p.leaf_var.size() != f.num_observed())
        throw InvalidParams("expected " + std::to_string(f.num_observed()) + " leaf variances");
    if (p.edge_corr.size() != f.num_edges())
        throw InvalidParams("expected " + std::to_string(f.num_edges()) + " edge correlations");
    for (double v : p.leaf_var)
        if (!(v > 0) || !std::isfinite(v)) throw InvalidParams("leaf variances must be positive");
    for (double r : p.edge_corr)
        if (!(std::abs(r) <= 1.0)) throw InvalidParams("edge correlations must lie in [-1, 1]");
}

namespace detail {

/// Path-product correlations between all nodes of f.
inline Eigen::MatrixXd node_correlations(const Forest& f, const std::vector<double>& corr) {
    const int n = static_cast<int>(f.num_nodes());
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> stack;
    std::vector<char> seen(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        std::fill(seen.begin(), seen.end(), 0);
        R(s, s) = 1.0;
        seen[static_cast<std::size_t>(s)] = 1;
        stack.assign(1, s);
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            for (auto [w, e] : f.neighbors(x)) {
                if (seen[static_cast<std::size_t>(w)]) continue;
                seen[static_cast<std::size_t>(w)] = 1;
                R(s, w) = R(s, x) * corr[static_cast<std::size_t>(e)];
                stack.push_back(w);
            }
        }
    }
    return R;
}

inline double log_det_spd(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace detail

/// Correlation matrix over the observed nodes (forest.observed() order).
inline Eigen::MatrixXd correlation(const Forest& f, const ModelParams& p) {
    validate_params(f, p);
    const Eigen::MatrixXd R = detail::node_correlations(f, p.edge_corr);
    const auto& obs = f.observed();
    const int k = static_cast<int>(obs.size());
    Eigen::MatrixXd C(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) C(i, j) = R(obs[static_cast<std::size_t>(i)], obs[static_cast<std::size_t>(j)]);
    return C;
}

/// Sigma_vw = R_vw sqrt(w_v w_w) over the observed nodes.
inline Eigen::MatrixXd covariance(const Forest& f, const ModelParams& p) {
    Eigen::MatrixXd C = correlation(f, p);
    Eigen::VectorXd sd(static_cast<Eigen::Index>(p.leaf_var.size()));
    for (std::size_t i = 0; i < p.leaf_var.size(); ++i) sd(static_cast<Eigen::Index>(i)) = std::sqrt(p.leaf_var[i]);
    return sd.asDiagonal() * C * sd.asDiagonal();
}

/// n draws (rows) from N(0, sigma); deterministic in the seed.
inline Eigen::MatrixXd sample_from_cov(const Eigen::MatrixXd& sigma, std::size_t n, std::uint64_t seed) {
    const Eigen::Index k = sigma.rows();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), k);
    if (n == 0) return X;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), k);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
        for (Eigen::Index j = 0; j < k; ++j) Z(i, j) = gauss(rng);
    X.noalias() = Z * L.transpose();
    return X;
}

inline Eigen::MatrixXd sample(const Forest& f, const ModelParams& p, std::size_t n, std::uint64_t seed) {
    return sample_from_cov(covariance(f, p), n, seed);
}

/// Sample size, second-moment matrix S and the ids labelling its rows.
struct SufficientStats {
    std::size_t n = 0;
    Eigen::MatrixXd second_moment;
    std::vector<std::string> ids;
};

/// S = X^T X / n; with `center`, the sample mean is removed first.
inline SufficientStats suff_stats(const Eigen::MatrixXd& samples, std::vector<std::string> ids = {},
                                  bool center = false) {
    if (samples.rows() < 1) throw InvalidArgument("need at least one observation");
    if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != samples.cols())
        throw InvalidArgument("id count differs from the number of columns");
    SufficientStats st;
    st.n = static_cast<std::size_t>(samples.rows());
    st.ids = std::move(ids);
    if (center) {
        const Eigen::MatrixXd c = samples.rowwise() - samples.colwise().mean();
        st.second_moment = (c.transpose() * c) / static_cast<double>(samples.rows());
    } else {
        st.second_moment = (samples.transpose() * samples) / static_cast<double>(samples.rows());
    }
    return st;
}

/// Population shortcut: S is sigma itself.
inline SufficientStats suff_stats_from_cov(const Eigen::MatrixXd& sigma, std::size_t n,
                                           std::vector<std::string> ids = {}) {
    if (n < 1) throw InvalidArgument("n must be positive");
    return SufficientStats{n, sigma, std::move(ids)};
}

/// -(n/2)(k log 2pi + log det sigma + tr(sigma^-1 S)).
inline double loglik(const Eigen::MatrixXd& sigma, const SufficientStats& st) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance is not positive definite");
    const double k = static_cast<double>(sigma.rows());
    const double tr = llt.solve(st.second_moment).trace();
    return -0.5 * static_cast<double>(st.n) * (k * std::log(2.0 * std::numbers::pi) + detail::log_det_spd(llt) + tr);
}

/// KL(N(0, sigma_true) || N(0, sigma)).
inline double kl_divergence(const Eigen::MatrixXd& sigma_true, const Eigen::MatrixXd& sigma) {
    if (sigma_true.rows() != sigma.rows()) throw InvalidArgument("dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> a(sigma_true), b(sigma);
    if (a.info() != Eigen::Success || b.info() != Eigen::Success)
        throw NotPositiveDefinite("covariance is not positive definite");
    const double k = static_cast<double>(sigma.rows());
    return 0.5 * (b.solve(sigma_true).trace() - k - (detail::log_det_spd(a) - detail::log_det_spd(b)));
}

/**
 * H_q(p) = sum_v (w_v - s*_vv)^2 + sum_{v<w} (R_vw(p) - r*_vw)^2 with r* the
 * correlations of sigma_true (observed order of f).
 */
inline double h_q(const Forest& f, const ModelParams& p, const Eigen::MatrixXd& sigma_true) {
    const Eigen::MatrixXd C = correlation(f, p);
    const Eigen::Index k = C.rows();
    if (sigma_true.rows() != k) throw InvalidArgument("dimension mismatch");
    double h = 0.0;
    for (Eigen::Index v = 0; v < k; ++v) {
        const double d = p.leaf_var[static_cast<std::size_t>(v)] - sigma_true(v, v);
        h += d * d;
        for (Eigen::Index w = v + 1; w < k; ++w) {
            const double r = sigma_true(v, w) / std::sqrt(sigma_true(v, v) * sigma_true(w, w));
            h += (C(v, w) - r) * (C(v, w) - r);
        }
    }
    return h;
}

/**
 * H_q as a monomial sum of squares: coordinates are the leaf variances
 * (domain [0, inf)) followed by the edge correlations (domain [-1, 1]).
 * Correlations below `zero_tol` in magnitude count as exact zeros.
 */
inline MonomialSos h_q_system(const Forest& f, const Eigen::MatrixXd& sigma_true, double zero_tol = 1e-12) {
    const auto& obs = f.observed();
    const int k = static_cast<int>(obs.size());
    if (sigma_true.rows() != k || sigma_true.cols() != k) throw InvalidArgument("dimension mismatch");
    MonomialSos sos;
    sos.dim = k + static_cast<int>(f.num_edges());
    for (int v : obs) {
        sos.names.push_back("var:" + f.id(v));
        sos.domain.push_back({0.0, std::numeric_limits<double>::infinity()});
    }
    for (std::size_t e = 0; e < f.num_edges(); ++e) {
        sos.names.push_back("corr:" + f.edge_label(static_cast<int>(e)));
        sos.domain.push_back({-1.0, 1.0});
    }
    for (int v = 0; v < k; ++v) {
        MonomialTerm t;
        t.u.assign(static_cast<std::size_t>(sos.dim), 0);
        t.u[static_cast<std::size_t>(v)] = 1;
        t.c = sigma_true(v, v);
        sos.terms.push_back(std::move(t));
    }
    const detail::RootedForest rooted(f);
    for (int v = 0; v < k; ++v) {
        for (int w = v + 1; w < k; ++w) {
            double r = sigma_true(v, w) / std::sqrt(sigma_true(v, v) * sigma_true(w, w));
            if (std::abs(r) < zero_tol) r = 0.0;
            const int a = obs[static_cast<std::size_t>(v)], b = obs[static_cast<std::size_t>(w)];
            if (rooted.comp[static_cast<std::size_t>(a)] != rooted.comp[static_cast<std::size_t>(b)]) {
                if (r != 0.0)
                    throw EmptyZeroSet("pair " + f.id(a) + "," + f.id(b) +
                                       " is correlated but disconnected in the forest");
                continue;
            }
            MonomialTerm t;
            t.u.assign(static_cast<std::size_t>(sos.dim), 0);
            for (int e : rooted.path_edges(a, b)) t.u[static_cast<std::size_t>(k + e)] = 1;
            t.c = r;
            sos.terms.push_back(std::move(t));
        }
    }
    return sos;
}

struct EmConfig {
    int max_iter = 2000;
    double rel_tol = 1e-9;
    int restarts = 5;
    std::uint64_t seed = 0;
    double corr_clamp = 1e-9;
    unsigned threads = 1;

    void validate() const {
        if (max_iter < 1 || !(rel_tol > 0) || restarts < 1 || !(corr_clamp > 0 && corr_clamp < 1))
            throw InvalidArgument("invalid EM configuration");
    }
};

struct EmResult {
    ModelParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    int restart = 0;
    std::vector<double> trace;  // observed log-likelihood after each iteration
};

namespace detail {

/// Permutation taking stats rows to f.observed() order.
inline Eigen::MatrixXd aligned_moments(const Forest& f, const SufficientStats& st) {
    const auto k = static_cast<Eigen::Index>(f.num_observed());
    if (st.second_moment.rows() != k || st.second_moment.cols() != k)
        throw InvalidArgument("statistics cover " + std::to_string(st.second_moment.rows()) +
                              " variables but the forest observes " + std::to_string(k));
    if (st.ids.empty()) return st.second_moment;
    std::unordered_map<std::string, Eigen::Index> pos;
    for (std::size_t i = 0; i < st.ids.size(); ++i) pos.emplace(st.ids[i], static_cast<Eigen::Index>(i));
    std::vector<Eigen::Index> perm;
    for (int v : f.observed()) {
        auto it = pos.find(f.id(v));
        if (it == pos.end()) throw LeafMismatch("statistics lack observed node '" + f.id(v) + "'");
        perm.push_back(it->second);
    }
    Eigen::MatrixXd S(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) S(i, j) = st.second_moment(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    return S;
}

/// One EM run from fixed starting parameters.
class EmRunner {
public:
    EmRunner(const Forest& f, const Eigen::MatrixXd& S, std::size_t n, const EmConfig& cfg)
        : f_(f), S_(S), n_(static_cast<double>(n)), cfg_(cfg) {
        for (std::size_t i = 0; i < f.num_nodes(); ++i)
            (f.is_latent(static_cast<int>(i)) ? hid_ : obs_).push_back(static_cast<int>(i));
        pos_.assign(f.num_nodes(), -1);
        for (std::size_t i = 0; i < obs_.size(); ++i) pos_[static_cast<std::size_t>(obs_[i])] = static_cast<int>(i);
        for (std::size_t i = 0; i < hid_.size(); ++i)
            pos_[static_cast<std::size_t>(hid_[i])] = static_cast<int>(obs_.size() + i);
    }

    EmResult run(ModelParams p) const {
        EmResult res;
        Eigen::MatrixXd M;
        double ll = estep(p, M);
        res.trace.push_back(ll);
        for (int it = 1; it <= cfg_.max_iter; ++it) {
            mstep(p, M);
            const double next = estep(p, M);
            res.trace.push_back(next);
            res.iterations = it;
            const bool done = std::abs(next - ll) <= cfg_.rel_tol * std::abs(ll);
            ll = next;
            if (done) {
                res.converged = true;
                break;
            }
        }
        res.params = std::move(p);
        res.loglik = ll;
        return res;
    }

private:
    // Expected complete-data second moments M (ordered observed, latent) and
    // the observed log-likelihood at p.
    double estep(const ModelParams& p, Eigen::MatrixXd& M) const {
        const Eigen::MatrixXd R = node_correlations(f_, p.edge_corr);
        const auto no = static_cast<Eigen::Index>(obs_.size()), nh = static_cast<Eigen::Index>(hid_.size());
        std::vector<double> sd(f_.num_nodes(), 1.0);
        for (std::size_t i = 0; i < obs_.size(); ++i) sd[static_cast<std::size_t>(obs_[i])] = std::sqrt(p.leaf_var[i]);
        Eigen::MatrixXd J(no + nh, no + nh);
        for (std::size_t a = 0; a < f_.num_nodes(); ++a)
            for (std::size_t b = 0; b < f_.num_nodes(); ++b)
                J(pos_[a], pos_[b]) = R(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * sd[a] * sd[b];
        const Eigen::MatrixXd Soo = J.topLeftCorner(no, no);
        Eigen::LLT<Eigen::MatrixXd> llt(Soo);
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("model covariance became singular during EM");
        M.resize(no + nh, no + nh);
        M.topLeftCorner(no, no) = S_;
        if (nh > 0) {
            const Eigen::MatrixXd Soh = J.topRightCorner(no, nh);
            const Eigen::MatrixXd Bt = llt.solve(Soh);  // (Sigma_HO Sigma_OO^-1)^T
            const Eigen::MatrixXd BS = Bt.transpose() * S_;
            M.bottomLeftCorner(nh, no) = BS;
            M.topRightCorner(no, nh) = BS.transpose();
            M.bottomRightCorner(nh, nh) =
                J.bottomRightCorner(nh, nh) - Bt.transpose() * Soh + BS * Bt;
        }
        const double k = static_cast<double>(no);
        return -0.5 * n_ * (k * std::log(2.0 * std::numbers::pi) + log_det_spd(llt) + llt.solve(S_).trace());
    }

    void mstep(ModelParams& p, const Eigen::MatrixXd& M) const {
        const double cap = 1.0 - cfg_.corr_clamp;
        for (std::size_t e = 0; e < f_.num_edges(); ++e) {
            const int a = pos_[static_cast<std::size_t>(f_.edges()[e].u)];
            const int b = pos_[static_cast<std::size_t>(f_.edges()[e].v)];
            const double den = std::sqrt(M(a, a) * M(b, b));
            double r = den > 0 ? M(a, b) / den : 0.0;
            p.edge_corr[e] = std::clamp(r, -cap, cap);
        }
        for (std::size_t i = 0; i < obs_.size(); ++i)
            p.leaf_var[i] = std::max(M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), kVarFloor);
    }

public:
    static constexpr double kVarFloor = 1e-12;

private:
    const Forest& f_;
    Eigen::MatrixXd S_;
    double n_;
    EmConfig cfg_;
    std::vector<int> obs_, hid_, pos_;
};

}  // namespace detail

/// Random starting point: leaf variances S_vv, correlations +-U[0.1, 0.9].
inline ModelParams em_initial_params(const Forest& f, const Eigen::MatrixXd& S, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.1, 0.9);
    std::bernoulli_distribution flip(0.5);
    ModelParams p;
    for (Eigen::Index i = 0; i < S.rows(); ++i) p.leaf_var.push_back(std::max(S(i, i), detail::EmRunner::kVarFloor));
    for (std::size_t e = 0; e < f.num_edges(); ++e) {
        const double m = mag(rng);
        p.edge_corr.push_back(flip(rng) ? -m : m);
    }
    return p;
}

/**
 * Maximum likelihood by EM, best of cfg.restarts runs (ties to the lower
 * restart index). If `init` is given it seeds restart 0.
 */
inline EmResult em_fit(const Forest& f, const SufficientStats& st, const EmConfig& cfg = {},
                       const ModelParams* init = nullptr) {
    cfg.validate();
    const Eigen::MatrixXd S = detail::aligned_moments(f, st);
    const detail::EmRunner runner(f, S, st.n, cfg);
    // without latent nodes one M-step is exact, so restarts are redundant
    const int restarts = f.num_latent() == 0 ? 1 : cfg.restarts;
    std::vector<EmResult> runs(static_cast<std::size_t>(restarts));
    detail::parallel_for(static_cast<std::size_t>(restarts), cfg.threads, [&](std::size_t r) {
        ModelParams p = (r == 0 && init) ? *init : em_initial_params(f, S, detail::derive_seed(cfg.seed, r));
        validate_params(f, p);
        runs[r] = runner.run(std::move(p));
        runs[r].restart = static_cast<int>(r);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].loglik > runs[best].loglik) best = r;
    return std::move(runs[best]);
}

}  // namespace lf
