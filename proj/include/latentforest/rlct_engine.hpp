#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "latentforest/detail/double_description.hpp"
#include "latentforest/detail/simplex.hpp"
#include "latentforest/error.hpp"
#include "latentforest/monomial.hpp"
#include "latentforest/rational.hpp"

namespace lf {

/// Largest ambient dimension handed to the polyhedral hull.
inline constexpr int kMaxHullDim = 24;

/**
 * Monomial system split into the part with nonzero constants and the part
 * with zero constants. Zero-part exponents are projected onto the
 * coordinates no nonzero term touches.
 */
struct PartSplit {
    std::vector<int> nonzero_coords;
    std::vector<int> zero_coords;
    std::vector<MonomialTerm> nonzero_terms;  // full-length exponents
    std::vector<MonomialTerm> zero_terms;     // exponents over zero_coords
};

inline PartSplit split_parts(const MonomialSos& sos) {
    sos.validate();
    PartSplit p;
    std::vector<bool> touched(static_cast<std::size_t>(sos.dim), false);
    for (const MonomialTerm& t : sos.terms) {
        if (t.c == 0.0) continue;
        p.nonzero_terms.push_back(t);
        for (int j = 0; j < sos.dim; ++j)
            if (t.u[static_cast<std::size_t>(j)] > 0) touched[static_cast<std::size_t>(j)] = true;
    }
    for (int j = 0; j < sos.dim; ++j)
        (touched[static_cast<std::size_t>(j)] ? p.nonzero_coords : p.zero_coords).push_back(j);
    for (const MonomialTerm& t : sos.terms) {
        if (t.c != 0.0) continue;
        MonomialTerm z;
        bool any = false;
        for (int j : p.zero_coords) {
            z.u.push_back(t.u[static_cast<std::size_t>(j)]);
            any = any || t.u[static_cast<std::size_t>(j)] > 0;
        }
        if (!any)
            throw EmptyZeroSet("a zero-constant term is forced away from zero on the nonzero fiber");
        p.zero_terms.push_back(std::move(z));
    }
    return p;
}

namespace detail {

inline int exact_rank(std::vector<std::vector<Rational>> a) {
    if (a.empty()) return 0;
    const std::size_t rows = a.size(), cols = a[0].size();
    int rank = 0;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && a[p][c].sign() == 0) ++p;
        if (p == rows) continue;
        std::swap(a[p], a[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (a[i][c].sign() == 0) continue;
            const Rational f = a[i][c] / a[r][c];
            for (std::size_t k = c; k < cols; ++k) a[i][k] -= f * a[r][k];
        }
        ++r;
        ++rank;
    }
    return rank;
}

/// log|w| bounds for coordinate interval iv restricted to one sign.
inline std::pair<double, double> log_bounds(const Interval& iv, bool negative) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!negative)
        return {iv.lo > 0 ? std::log(iv.lo) : -inf, std::isfinite(iv.hi) ? std::log(iv.hi) : inf};
    return {iv.hi < 0 ? std::log(-iv.hi) : -inf, std::isfinite(iv.lo) ? std::log(-iv.lo) : inf};
}

enum class FiberCheck { Interior, Boundary, Empty };

/// Is {x : x0 + N z inside [L, H]} nonempty, and does it meet the open box?
inline FiberCheck check_box(const Eigen::VectorXd& x0, const Eigen::MatrixXd& N,
                            const std::vector<std::pair<double, double>>& bounds) {
    const int k = static_cast<int>(N.cols());
    const int nv = 2 * k + 1;  // z+, z-, delta
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    for (std::size_t j = 0; j < bounds.size(); ++j) {
        const auto [L, H] = bounds[j];
        const int jj = static_cast<int>(j);
        if (std::isfinite(L)) {
            std::vector<double> row(static_cast<std::size_t>(nv), 0.0);
            for (int c = 0; c < k; ++c) {
                row[static_cast<std::size_t>(c)] = -N(jj, c);
                row[static_cast<std::size_t>(k + c)] = N(jj, c);
            }
            row[static_cast<std::size_t>(2 * k)] = 1.0;
            A.push_back(std::move(row));
            b.push_back(x0(jj) - L);
        }
        if (std::isfinite(H)) {
            std::vector<double> row(static_cast<std::size_t>(nv), 0.0);
            for (int c = 0; c < k; ++c) {
                row[static_cast<std::size_t>(c)] = N(jj, c);
                row[static_cast<std::size_t>(k + c)] = -N(jj, c);
            }
            row[static_cast<std::size_t>(2 * k)] = 1.0;
            A.push_back(std::move(row));
            b.push_back(H - x0(jj));
        }
    }
    std::vector<double> cap(static_cast<std::size_t>(nv), 0.0);
    cap[static_cast<std::size_t>(2 * k)] = 1.0;
    A.push_back(cap);
    b.push_back(1.0);
    const LpResult res = lp_maximize(A, b, cap);
    if (res.status == LpStatus::Infeasible) return FiberCheck::Empty;
    return res.value > 1e-9 ? FiberCheck::Interior : FiberCheck::Boundary;
}

}  // namespace detail

/**
 * Codimension of the fiber of the nonzero part: the rank of its exponent
 * matrix, provided the fiber meets the interior of the domain in some sign
 * orthant. Throws EmptyFiber if no real solution exists in the domain and
 * NoInteriorSolution if solutions exist only on the boundary.
 */
inline int nonzero_codim(const PartSplit& split, const std::vector<Interval>& domain) {
    const auto& terms = split.nonzero_terms;
    if (terms.empty()) return 0;
    const auto& coords = split.nonzero_coords;
    const int r = static_cast<int>(terms.size());
    const int s = static_cast<int>(coords.size());

    std::vector<std::vector<Rational>> ur(static_cast<std::size_t>(r), std::vector<Rational>(static_cast<std::size_t>(s)));
    Eigen::MatrixXd U(r, s);
    Eigen::VectorXd b(r);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < s; ++j) {
            const int e = terms[static_cast<std::size_t>(i)].u[static_cast<std::size_t>(coords[static_cast<std::size_t>(j)])];
            ur[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = Rational(e);
            U(i, j) = e;
        }
        b(i) = std::log(std::abs(terms[static_cast<std::size_t>(i)].c));
    }
    const int rank = detail::exact_rank(ur);

    // log-linear system U x = b: particular solution and null space
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(s);
    const Eigen::VectorXd ub = svd.matrixU().transpose() * b;
    for (int i = 0; i < rank; ++i) x0 += svd.matrixV().col(i) * (ub(i) / sv(i));
    if ((U * x0 - b).norm() > 1e-9 * (1.0 + b.norm()))
        throw EmptyFiber("the nonzero-constant monomials have no common solution");
    const Eigen::MatrixXd N = svd.matrixV().rightCols(s - rank);

    // Sign patterns: parity of each monomial must match the sign of its
    // constant. Coordinates whose log box is sign-independent are eliminated
    // first so only sign-relevant coordinates are enumerated.
    std::vector<int> order;
    std::vector<bool> relevant(static_cast<std::size_t>(s), false);
    std::vector<int> forced(static_cast<std::size_t>(s), -1);
    for (int j = 0; j < s; ++j) {
        const Interval& iv = domain[static_cast<std::size_t>(coords[static_cast<std::size_t>(j)])];
        const bool pos_ok = iv.hi > 0, neg_ok = iv.lo < 0;
        if (pos_ok && !neg_ok) forced[static_cast<std::size_t>(j)] = 0;
        if (!pos_ok && neg_ok) forced[static_cast<std::size_t>(j)] = 1;
        relevant[static_cast<std::size_t>(j)] = !(pos_ok && neg_ok && iv.lo == -iv.hi);
    }
    for (int j = 0; j < s; ++j)
        if (!relevant[static_cast<std::size_t>(j)]) order.push_back(j);
    for (int j = 0; j < s; ++j)
        if (relevant[static_cast<std::size_t>(j)]) order.push_back(j);

    std::vector<std::vector<char>> rows;
    for (int i = 0; i < r; ++i) {
        std::vector<char> row(static_cast<std::size_t>(s + 1), 0);
        for (int c = 0; c < s; ++c)
            row[static_cast<std::size_t>(c)] =
                static_cast<char>(terms[static_cast<std::size_t>(i)].u[static_cast<std::size_t>(
                                      coords[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])])] & 1);
        row[static_cast<std::size_t>(s)] = terms[static_cast<std::size_t>(i)].c < 0 ? 1 : 0;
        rows.push_back(std::move(row));
    }
    for (int c = 0; c < s; ++c) {
        const int f = forced[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
        if (f < 0) continue;
        std::vector<char> row(static_cast<std::size_t>(s + 1), 0);
        row[static_cast<std::size_t>(c)] = 1;
        row[static_cast<std::size_t>(s)] = static_cast<char>(f);
        rows.push_back(std::move(row));
    }
    // GF(2) row reduction
    std::vector<int> pivot_row(static_cast<std::size_t>(s), -1);
    std::size_t nr = 0;
    for (int c = 0; c < s && nr < rows.size(); ++c) {
        std::size_t p = nr;
        while (p < rows.size() && !rows[p][static_cast<std::size_t>(c)]) ++p;
        if (p == rows.size()) continue;
        std::swap(rows[p], rows[nr]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (i != nr && rows[i][static_cast<std::size_t>(c)])
                for (int k = 0; k <= s; ++k) rows[i][static_cast<std::size_t>(k)] ^= rows[nr][static_cast<std::size_t>(k)];
        pivot_row[static_cast<std::size_t>(c)] = static_cast<int>(nr);
        ++nr;
    }
    for (std::size_t i = nr; i < rows.size(); ++i)
        if (rows[i][static_cast<std::size_t>(s)])
            throw EmptyFiber("no sign pattern in the domain matches the constants' signs");

    const int first_rel = static_cast<int>(std::count(relevant.begin(), relevant.end(), false));
    std::vector<int> free_rel;
    for (int c = first_rel; c < s; ++c)
        if (pivot_row[static_cast<std::size_t>(c)] < 0) free_rel.push_back(c);
    if (free_rel.size() > 20) throw DimensionTooLarge("too many sign-relevant free coordinates");

    bool boundary = false;
    for (std::uint64_t mask = 0; mask < (1ULL << free_rel.size()); ++mask) {
        std::vector<int> sigma(static_cast<std::size_t>(s), 0);  // indexed by position in `order`
        for (std::size_t k = 0; k < free_rel.size(); ++k)
            sigma[static_cast<std::size_t>(free_rel[k])] = static_cast<int>((mask >> k) & 1ULL);
        for (int c = s - 1; c >= first_rel; --c) {
            const int pr = pivot_row[static_cast<std::size_t>(c)];
            if (pr < 0) continue;
            int v = rows[static_cast<std::size_t>(pr)][static_cast<std::size_t>(s)];
            for (int k = c + 1; k < s; ++k)
                if (rows[static_cast<std::size_t>(pr)][static_cast<std::size_t>(k)]) v ^= sigma[static_cast<std::size_t>(k)];
            sigma[static_cast<std::size_t>(c)] = v;
        }
        std::vector<std::pair<double, double>> bounds(static_cast<std::size_t>(s));
        for (int c = 0; c < s; ++c) {
            const int j = order[static_cast<std::size_t>(c)];
            bounds[static_cast<std::size_t>(j)] = detail::log_bounds(
                domain[static_cast<std::size_t>(coords[static_cast<std::size_t>(j)])], sigma[static_cast<std::size_t>(c)] != 0);
        }
        const auto res = detail::check_box(x0, N, bounds);
        if (res == detail::FiberCheck::Interior) return rank;
        if (res == detail::FiberCheck::Boundary) boundary = true;
    }
    if (boundary) throw NoInteriorSolution("the fiber only meets the boundary of the domain");
    throw EmptyFiber("the fiber misses the domain");
}

/// Newton polyhedron conv{u_i} + R^d_{>=0}; each facet reads normal . x >= offset.
struct NewtonPolyhedron {
    int ambient_dim = 0;
    std::vector<std::vector<std::int64_t>> generators;
    struct Facet {
        std::vector<std::int64_t> normal;
        std::int64_t offset = 0;
    };
    std::vector<Facet> facets;
};

/**
 * Facets of the Newton polyhedron of the given exponent vectors. Duplicate
 * and dominated generators are dropped before the hull is built.
 */
inline NewtonPolyhedron newton_facets(const std::vector<std::vector<int>>& exponents) {
    if (exponents.empty()) throw InvalidArgument("Newton polyhedron needs at least one generator");
    const std::size_t d = exponents[0].size();
    if (d > static_cast<std::size_t>(kMaxHullDim))
        throw DimensionTooLarge("hull dimension " + std::to_string(d) + " exceeds " +
                                std::to_string(kMaxHullDim));
    std::set<std::vector<int>> uniq(exponents.begin(), exponents.end());
    std::vector<std::vector<int>> gens(uniq.begin(), uniq.end());
    std::vector<std::vector<int>> kept;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < gens.size() && !dominated; ++j) {
            if (i == j) continue;
            bool ge = true;
            for (std::size_t k = 0; k < d && ge; ++k) ge = gens[i][k] >= gens[j][k];
            dominated = ge;  // distinct and componentwise >=, so strictly above
        }
        if (!dominated) kept.push_back(gens[i]);
    }

    NewtonPolyhedron poly;
    poly.ambient_dim = static_cast<int>(d);
    for (const auto& g : kept) poly.generators.emplace_back(g.begin(), g.end());

    // polar cone rows: (1, u) for the first generator, (0, e_j), then the rest
    std::vector<detail::IVec> rows;
    auto gen_row = [&](const std::vector<int>& g) {
        detail::IVec row(d + 1, 0);
        row[0] = 1;
        for (std::size_t k = 0; k < d; ++k) row[k + 1] = g[k];
        return row;
    };
    rows.push_back(gen_row(kept[0]));
    for (std::size_t k = 0; k < d; ++k) {
        detail::IVec row(d + 1, 0);
        row[k + 1] = 1;
        rows.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < kept.size(); ++i) rows.push_back(gen_row(kept[i]));

    for (auto& ray : detail::extreme_rays(rows, d + 1)) {
        bool recession_only = true;
        for (std::size_t k = 1; k <= d; ++k) recession_only = recession_only && ray[k] == 0;
        if (recession_only) continue;
        NewtonPolyhedron::Facet f;
        f.normal.assign(ray.begin() + 1, ray.end());
        f.offset = -ray[0];
        poly.facets.push_back(std::move(f));
    }
    std::sort(poly.facets.begin(), poly.facets.end(), [](const auto& a, const auto& b) {
        return std::tie(a.normal, a.offset) < std::tie(b.normal, b.offset);
    });
    return poly;
}

/**
 * 1-distance t (the point t*1 first meets the polyhedron) and the
 * codimension of the face containing t*1 in its relative interior,
 * i.e. the rank of the tight facet normals.
 */
inline std::pair<Rational, int> one_distance_mult(const NewtonPolyhedron& poly) {
    Rational t(0);
    for (const auto& f : poly.facets) {
        std::int64_t s = 0;
        for (auto a : f.normal) s = detail::add_checked(s, a);
        if (s == 0) continue;
        const Rational v(f.offset, s);
        if (v > t) t = v;
    }
    if (t.sign() <= 0) throw EmptyZeroSet("the origin lies in the Newton polyhedron");
    std::vector<std::vector<Rational>> tight;
    for (const auto& f : poly.facets) {
        std::int64_t s = 0;
        for (auto a : f.normal) s = detail::add_checked(s, a);
        if (t * Rational(s) == Rational(f.offset)) {
            std::vector<Rational> row;
            for (auto a : f.normal) row.emplace_back(a);
            tight.push_back(std::move(row));
        }
    }
    return {t, detail::exact_rank(std::move(tight))};
}

/**
 * RLCT of a monomial sum of squares: codimension of the nonzero fiber plus
 * the reciprocal 1-distance of the zero part's Newton polyhedron, whose
 * multiplicity is the multiplicity of the whole.
 */
inline Rlct rlct_monomial_sos(const MonomialSos& sos) {
    const PartSplit split = split_parts(sos);
    const int codim = nonzero_codim(split, sos.domain);
    if (split.zero_terms.empty()) return Rlct{Rational(codim), 1};

    // the zero part lives near w_j = 0 on the coordinates it uses
    std::vector<int> used;
    for (std::size_t k = 0; k < split.zero_coords.size(); ++k) {
        bool any = false;
        for (const auto& t : split.zero_terms) any = any || t.u[k] > 0;
        if (!any) continue;
        const Interval& iv = sos.domain[static_cast<std::size_t>(split.zero_coords[k])];
        if (!iv.contains(0.0))
            throw UnsupportedDomain("coordinate " + std::to_string(split.zero_coords[k]) +
                                    " of the zero part must range over 0");
        used.push_back(static_cast<int>(k));
    }
    std::vector<std::vector<int>> exps;
    for (const auto& t : split.zero_terms) {
        std::vector<int> e;
        for (int k : used) e.push_back(t.u[static_cast<std::size_t>(k)]);
        exps.push_back(std::move(e));
    }
    const auto [t, mult] = one_distance_mult(newton_facets(exps));
    return Rlct{Rational(codim) + Rational(1) / t, mult};
}

}  // namespace lf
