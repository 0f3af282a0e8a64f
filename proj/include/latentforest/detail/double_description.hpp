#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "latentforest/error.hpp"
#include "latentforest/rational.hpp"

namespace lf::detail {

/// Fixed-width bitset sized at runtime.
class Bits {
public:
    Bits() = default;
    explicit Bits(std::size_t n) : w_((n + 63) / 64, 0) {}
    void set(std::size_t i) { w_[i >> 6] |= (1ULL << (i & 63)); }
    bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1ULL; }
    Bits operator&(const Bits& o) const {
        Bits r;
        r.w_.resize(w_.size());
        for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] = w_[k] & o.w_[k];
        return r;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto x : w_) c += static_cast<std::size_t>(__builtin_popcountll(x));
        return c;
    }
    bool subset_of(const Bits& o) const {
        for (std::size_t k = 0; k < w_.size(); ++k)
            if (w_[k] & ~o.w_[k]) return false;
        return true;
    }

private:
    std::vector<std::uint64_t> w_;
};

using IVec = std::vector<std::int64_t>;

inline void reduce_by_gcd(IVec& v) {
    std::int64_t g = 0;
    for (auto x : v) g = std::gcd(g, x < 0 ? -x : x);
    if (g > 1)
        for (auto& x : v) x /= g;
}

inline std::int64_t dot_checked(const IVec& a, const IVec& b) {
    __int128 s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<__int128>(a[k]) * b[k];
    return narrow_checked(s);
}

/**
 * Extreme rays of the pointed cone {a : g.a >= 0 for all rows g} by the
 * double description method with the combinatorial adjacency test. The first
 * `dim` rows must be linearly independent (they seed the initial cone).
 */
inline std::vector<IVec> extreme_rays(const std::vector<IVec>& rows, std::size_t dim) {
    const std::size_t m = rows.size();
    if (m < dim) throw InvalidArgument("double description needs at least dim constraints");
    // Initial cone: inverse of the leading dim x dim block, column by column,
    // scaled to integers. Rows are supplied so that this block is unimodular
    // up to a triangular structure; solve exactly with rationals anyway.
    std::vector<std::vector<Rational>> a(dim, std::vector<Rational>(2 * dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) a[i][j] = Rational(rows[i][j]);
        a[i][dim + i] = Rational(1);
    }
    for (std::size_t c = 0; c < dim; ++c) {
        std::size_t p = c;
        while (p < dim && a[p][c].sign() == 0) ++p;
        if (p == dim) throw InvalidArgument("seed constraints are singular");
        std::swap(a[p], a[c]);
        const Rational inv = Rational(1) / a[c][c];
        for (auto& x : a[c]) x *= inv;
        for (std::size_t r = 0; r < dim; ++r) {
            if (r == c || a[r][c].sign() == 0) continue;
            const Rational f = a[r][c];
            for (std::size_t k = 0; k < 2 * dim; ++k) a[r][k] -= f * a[c][k];
        }
    }
    struct Ray {
        IVec v;
        Bits zero;
    };
    std::vector<Ray> rays;
    for (std::size_t j = 0; j < dim; ++j) {
        // column j of the inverse: satisfies row j with value 1, others 0
        std::int64_t l = 1;
        for (std::size_t i = 0; i < dim; ++i) l = std::lcm(l, a[i][dim + j].den());
        Ray r{IVec(dim), Bits(m)};
        for (std::size_t i = 0; i < dim; ++i)
            r.v[i] = mul_checked(a[i][dim + j].num(), l / a[i][dim + j].den());
        reduce_by_gcd(r.v);
        for (std::size_t i = 0; i < dim; ++i)
            if (i != j) r.zero.set(i);
        rays.push_back(std::move(r));
    }

    for (std::size_t k = dim; k < m; ++k) {
        const IVec& g = rows[k];
        std::vector<std::int64_t> s(rays.size());
        std::vector<std::size_t> pos, neg;
        std::vector<Ray> next;
        for (std::size_t r = 0; r < rays.size(); ++r) {
            s[r] = dot_checked(g, rays[r].v);
            if (s[r] > 0)
                pos.push_back(r);
            else if (s[r] < 0)
                neg.push_back(r);
        }
        if (neg.empty()) {
            for (std::size_t r = 0; r < rays.size(); ++r)
                if (s[r] == 0) rays[r].zero.set(k);
            continue;
        }
        for (std::size_t p : pos)
            for (std::size_t q : neg) {
                const Bits common = rays[p].zero & rays[q].zero;
                if (common.count() + 2 < dim) continue;
                bool adjacent = true;
                for (std::size_t r = 0; r < rays.size() && adjacent; ++r)
                    if (r != p && r != q && common.subset_of(rays[r].zero)) adjacent = false;
                if (!adjacent) continue;
                Ray nr{IVec(dim), common};
                for (std::size_t t = 0; t < dim; ++t)
                    nr.v[t] = narrow_checked(static_cast<__int128>(s[p]) * rays[q].v[t] -
                                             static_cast<__int128>(s[q]) * rays[p].v[t]);
                reduce_by_gcd(nr.v);
                nr.zero.set(k);
                next.push_back(std::move(nr));
            }
        for (std::size_t r = 0; r < rays.size(); ++r) {
            if (s[r] < 0) continue;
            if (s[r] == 0) rays[r].zero.set(k);
            next.push_back(std::move(rays[r]));
        }
        rays = std::move(next);
    }
    std::vector<IVec> out;
    out.reserve(rays.size());
    for (auto& r : rays) out.push_back(std::move(r.v));
    return out;
}

}  // namespace lf::detail
