#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latentforest/error.hpp"
#include "latentforest/monomial.hpp"

namespace lf {

enum class IntegrationMethod { Quadrature, MonteCarlo };

struct LaplaceConfig {
    IntegrationMethod method = IntegrationMethod::Quadrature;
    double rel_tol = 1e-7;
    std::size_t max_cells = 400000;
    std::size_t mc_points = 1000000;
    std::uint64_t seed = 0;
};

struct LaplaceEstimate {
    double lambda_hat = 0.0;
    int mult_hat = 1;
    std::vector<double> n_grid;
    std::vector<double> log_z;
    std::vector<double> residuals;  // RMS fit residual for m = 1..4
    std::vector<double> std_error;  // Monte Carlo only: standard error of log Z
    IntegrationMethod method = IntegrationMethod::Quadrature;
};

/// 10^3 .. 10^6 in half-decade steps.
inline std::vector<double> default_n_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 6; ++k) g.push_back(std::pow(10.0, 3.0 + 0.5 * k));
    return g;
}

namespace detail {

struct GaussRule {
    std::vector<double> x, w;  // on [-1, 1]
};

inline GaussRule gauss_legendre(int order) {
    GaussRule r;
    for (int i = 1; i <= order; ++i) {
        double z = std::cos(std::numbers::pi * (i - 0.25) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x.push_back(z);
        r.w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
    }
    return r;
}

using Integrand = std::function<double(const std::vector<double>&)>;

struct Cell {
    std::vector<double> lo, hi;
    double value = 0.0, error = 0.0;
    bool operator<(const Cell& o) const { return error < o.error; }
};

/// Tensor-product rule over a cell.
inline double tensor_rule(const Integrand& f, const GaussRule& g, const std::vector<double>& lo,
                          const std::vector<double>& hi) {
    const std::size_t d = lo.size();
    const std::size_t p = g.x.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> pt(d);
    double vol = 1.0;
    for (std::size_t k = 0; k < d; ++k) vol *= 0.5 * (hi[k] - lo[k]);
    double s = 0.0;
    while (true) {
        double w = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            pt[k] = 0.5 * (lo[k] + hi[k]) + 0.5 * (hi[k] - lo[k]) * g.x[idx[k]];
            w *= g.w[idx[k]];
        }
        s += w * f(pt);
        std::size_t k = 0;
        while (k < d && ++idx[k] == p) idx[k++] = 0;
        if (k == d) break;
    }
    return s * vol;
}

/**
 * Globally adaptive cubature of f over the leaves of `mesh` (refined in
 * place, so the mesh can seed the next, sharper integrand).
 */
inline double adaptive_integrate(const Integrand& f, std::vector<Cell>& mesh, const LaplaceConfig& cfg) {
    static const GaussRule g5 = gauss_legendre(5), g8 = gauss_legendre(8);
    auto eval = [&](Cell& c) {
        const double a = tensor_rule(f, g8, c.lo, c.hi);
        const double b = tensor_rule(f, g5, c.lo, c.hi);
        c.value = a;
        c.error = std::abs(a - b);
    };
    std::priority_queue<Cell> pq;
    for (Cell& c : mesh) {
        eval(c);
        pq.push(std::move(c));
    }
    mesh.clear();
    double total = 0.0, err = 0.0;
    auto refresh = [&] {
        // recomputed exactly to avoid drift in the running sums
        auto copy = pq;
        total = err = 0.0;
        while (!copy.empty()) {
            total += copy.top().value;
            err += copy.top().error;
            copy.pop();
        }
    };
    refresh();
    std::size_t since = 0;
    while (err > cfg.rel_tol * std::abs(total) + 1e-300) {
        if (pq.size() >= cfg.max_cells)
            throw IntegrationFailure("cell budget exhausted before reaching the tolerance");
        Cell c = pq.top();
        pq.pop();
        total -= c.value;
        err -= c.error;
        const std::size_t d = c.lo.size();
        std::vector<std::size_t> axes;
        if (d <= 3) {
            for (std::size_t k = 0; k < d; ++k) axes.push_back(k);
        } else {
            std::size_t best = 0;
            for (std::size_t k = 1; k < d; ++k)
                if (c.hi[k] - c.lo[k] > c.hi[best] - c.lo[best]) best = k;
            axes.push_back(best);
        }
        const std::size_t children = std::size_t{1} << axes.size();
        for (std::size_t m = 0; m < children; ++m) {
            Cell ch{c.lo, c.hi, 0.0, 0.0};
            for (std::size_t a = 0; a < axes.size(); ++a) {
                const std::size_t k = axes[a];
                const double mid = 0.5 * (c.lo[k] + c.hi[k]);
                if ((m >> a) & 1U)
                    ch.lo[k] = mid;
                else
                    ch.hi[k] = mid;
            }
            eval(ch);
            total += ch.value;
            err += ch.error;
            pq.push(std::move(ch));
        }
        if (++since == 4096) {
            refresh();
            since = 0;
        }
    }
    refresh();
    mesh.reserve(pq.size());
    while (!pq.empty()) {
        mesh.push_back(pq.top());
        pq.pop();
    }
    return total;
}

/// Jittered-grid Monte Carlo; returns (estimate, standard error).
inline std::pair<double, double> stratified_mc(const Integrand& f, const std::vector<double>& lo,
                                               const std::vector<double>& hi, std::size_t points,
                                               std::uint64_t seed) {
    const std::size_t d = lo.size();
    const auto s = static_cast<std::size_t>(std::max(1.0, std::floor(std::pow(static_cast<double>(points), 1.0 / static_cast<double>(d)) + 1e-9)));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> pt(d);
    double vol = 1.0;
    for (std::size_t k = 0; k < d; ++k) vol *= hi[k] - lo[k];
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    while (true) {
        for (std::size_t k = 0; k < d; ++k)
            pt[k] = lo[k] + (hi[k] - lo[k]) * (static_cast<double>(idx[k]) + u(rng)) / static_cast<double>(s);
        const double v = f(pt);
        sum += v;
        sq += v * v;
        ++count;
        std::size_t k = 0;
        while (k < d && ++idx[k] == s) idx[k++] = 0;
        if (k == d) break;
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sq / static_cast<double>(count) - mean * mean);
    return {mean * vol, vol * std::sqrt(var / static_cast<double>(count))};
}

/// Fit log Z = a - (lambda/2) log n + (m - 1) log log n with m fixed in 1..4.
inline void fit_rlct(LaplaceEstimate& est) {
    const std::size_t k = est.n_grid.size();
    if (k < 3) throw InvalidArgument("need at least three n values");
    double best = std::numeric_limits<double>::infinity();
    est.residuals.clear();
    for (int m = 1; m <= 4; ++m) {
        Eigen::MatrixXd A(static_cast<Eigen::Index>(k), 2);
        Eigen::VectorXd y(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            const double ln = std::log(est.n_grid[i]);
            A(static_cast<Eigen::Index>(i), 0) = ln;
            A(static_cast<Eigen::Index>(i), 1) = 1.0;
            y(static_cast<Eigen::Index>(i)) = est.log_z[i] - (m - 1) * std::log(ln);
        }
        const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
        const double rms = std::sqrt((A * coef - y).squaredNorm() / static_cast<double>(k));
        est.residuals.push_back(rms);
        if (rms < best) {
            best = rms;
            est.lambda_hat = std::max(0.0, -2.0 * coef(0));
            est.mult_hat = m;
        }
    }
}

}  // namespace detail

/**
 * Estimates (lambda, m) of a phase function on a bounded box from the
 * growth of log Z_n = log int exp(-n H) over an n grid.
 */
inline LaplaceEstimate laplace_rlct_estimate(const std::function<double(const std::vector<double>&)>& h,
                                             const std::vector<Interval>& domain,
                                             std::vector<double> n_grid = default_n_grid(),
                                             const LaplaceConfig& cfg = {}) {
    const std::size_t d = domain.size();
    for (const Interval& iv : domain)
        if (!iv.bounded()) throw InvalidArgument("the Laplace oracle needs a bounded domain");
    if (cfg.method == IntegrationMethod::Quadrature && d > 6)
        throw InvalidArgument("quadrature supports at most 6 variables per block");
    if (cfg.method == IntegrationMethod::MonteCarlo && d > 10)
        throw InvalidArgument("Monte Carlo supports at most 10 variables per block");
    std::sort(n_grid.begin(), n_grid.end());
    LaplaceEstimate est;
    est.method = cfg.method;
    est.n_grid = n_grid;
    std::vector<double> lo, hi;
    for (const Interval& iv : domain) {
        lo.push_back(iv.lo);
        hi.push_back(iv.hi);
    }
    if (cfg.method == IntegrationMethod::Quadrature) {
        // walk n up geometrically so the mesh tracks the shrinking peak
        std::vector<detail::Cell> mesh{detail::Cell{lo, hi, 0.0, 0.0}};
        double n_walk = 1.0;
        for (double n : n_grid) {
            while (n_walk * 3.0 < n) {
                n_walk *= 3.0;
                const double nn = n_walk;
                detail::adaptive_integrate([&](const std::vector<double>& w) { return std::exp(-nn * h(w)); }, mesh, cfg);
            }
            n_walk = n;
            const double z = detail::adaptive_integrate([&](const std::vector<double>& w) { return std::exp(-n * h(w)); }, mesh, cfg);
            if (!(z > 0)) throw IntegrationFailure("Z_n vanished numerically");
            est.log_z.push_back(std::log(z));
        }
    } else {
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            const double n = n_grid[i];
            const auto [z, se] = detail::stratified_mc([&](const std::vector<double>& w) { return std::exp(-n * h(w)); },
                                                       lo, hi, cfg.mc_points, cfg.seed + i);
            if (!(z > 0)) throw IntegrationFailure("Monte Carlo estimate of Z_n is zero");
            est.log_z.push_back(std::log(z));
            est.std_error.push_back(se / z);
        }
    }
    detail::fit_rlct(est);
    return est;
}

/**
 * Monomial sums of squares split into blocks of variables that never share
 * a term; log Z_n is the sum of the block integrals' logs.
 */
inline LaplaceEstimate laplace_rlct_estimate(const MonomialSos& sos, std::vector<double> n_grid = default_n_grid(),
                                             const LaplaceConfig& cfg = {}) {
    sos.validate();
    const int d = sos.dim;
    std::vector<int> block(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) block[static_cast<std::size_t>(j)] = j;
    auto find = [&](int x) {
        while (block[static_cast<std::size_t>(x)] != x) x = block[static_cast<std::size_t>(x)] = block[static_cast<std::size_t>(block[static_cast<std::size_t>(x)])];
        return x;
    };
    for (const auto& t : sos.terms) {
        int first = -1;
        for (int j = 0; j < d; ++j) {
            if (t.u[static_cast<std::size_t>(j)] == 0) continue;
            if (first < 0) first = j;
            else block[static_cast<std::size_t>(find(j))] = find(first);
        }
    }
    std::sort(n_grid.begin(), n_grid.end());
    LaplaceEstimate total;
    total.method = cfg.method;
    total.n_grid = n_grid;
    total.log_z.assign(n_grid.size(), 0.0);
    double const_h = 0.0;
    for (const auto& t : sos.terms) {
        bool any = false;
        for (int x : t.u) any = any || x > 0;
        if (!any) const_h += (1.0 - t.c) * (1.0 - t.c);
    }
    std::vector<bool> done(static_cast<std::size_t>(d), false);
    for (int j = 0; j < d; ++j) {
        const int root = find(j);
        if (done[static_cast<std::size_t>(root)]) continue;
        done[static_cast<std::size_t>(root)] = true;
        std::vector<int> vars;
        for (int k = 0; k < d; ++k)
            if (find(k) == root) vars.push_back(k);
        struct LocalTerm {
            std::vector<std::pair<int, int>> pw;  // (local var, exponent)
            double c;
        };
        std::vector<LocalTerm> terms;
        for (const auto& t : sos.terms) {
            LocalTerm lt{{}, t.c};
            for (std::size_t a = 0; a < vars.size(); ++a)
                if (t.u[static_cast<std::size_t>(vars[a])] > 0) lt.pw.emplace_back(static_cast<int>(a), t.u[static_cast<std::size_t>(vars[a])]);
            if (!lt.pw.empty()) terms.push_back(std::move(lt));
        }
        std::vector<Interval> dom;
        for (int v : vars) dom.push_back(sos.domain[static_cast<std::size_t>(v)]);
        if (terms.empty()) {
            double vol = 1.0;
            for (const auto& iv : dom) {
                if (!iv.bounded()) throw InvalidArgument("the Laplace oracle needs a bounded domain");
                vol *= iv.width();
            }
            for (auto& lz : total.log_z) lz += std::log(vol);
            continue;
        }
        auto hb = [terms](const std::vector<double>& w) {
            double s = 0.0;
            for (const auto& t : terms) {
                double m = 1.0;
                for (auto [a, e] : t.pw) m *= e == 1 ? w[static_cast<std::size_t>(a)] : std::pow(w[static_cast<std::size_t>(a)], e);
                s += (m - t.c) * (m - t.c);
            }
            return s;
        };
        LaplaceConfig bc = cfg;
        bc.seed = cfg.seed * 1315423911ULL + static_cast<std::uint64_t>(root);
        const LaplaceEstimate part = laplace_rlct_estimate(hb, dom, n_grid, bc);
        for (std::size_t i = 0; i < n_grid.size(); ++i) total.log_z[i] += part.log_z[i];
        if (!part.std_error.empty()) {
            total.std_error.resize(n_grid.size(), 0.0);
            for (std::size_t i = 0; i < n_grid.size(); ++i)
                total.std_error[i] = std::hypot(total.std_error[i], part.std_error[i]);
        }
    }
    for (std::size_t i = 0; i < n_grid.size(); ++i) total.log_z[i] -= n_grid[i] * const_h;
    detail::fit_rlct(total);
    return total;
}

}  // namespace lf
