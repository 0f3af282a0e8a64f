#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace lf::detail {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    std::vector<double> x;
};

/**
 * Dense two-phase tableau simplex with Bland-style tie breaking:
 * maximize c.x subject to A x <= b, x >= 0. Intended for the handful of
 * variables that fiber feasibility checks need.
 */
class Simplex {
public:
    Simplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
            const std::vector<double>& c)
        : m_(static_cast<int>(b.size())), n_(static_cast<int>(c.size())),
          basis_(static_cast<std::size_t>(m_)), nonbasis_(static_cast<std::size_t>(n_ + 1)),
          d_(static_cast<std::size_t>(m_ + 2), std::vector<double>(static_cast<std::size_t>(n_ + 2), 0.0)) {
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) at(i, j) = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (int i = 0; i < m_; ++i) {
            basis_[static_cast<std::size_t>(i)] = n_ + i;
            at(i, n_) = -1.0;
            at(i, n_ + 1) = b[static_cast<std::size_t>(i)];
        }
        for (int j = 0; j < n_; ++j) {
            nonbasis_[static_cast<std::size_t>(j)] = j;
            at(m_, j) = -c[static_cast<std::size_t>(j)];
        }
        nonbasis_[static_cast<std::size_t>(n_)] = -1;
        at(m_ + 1, n_) = 1.0;
    }

    LpResult solve() {
        LpResult res;
        if (m_ > 0) {
            int r = 0;
            for (int i = 1; i < m_; ++i)
                if (at(i, n_ + 1) < at(r, n_ + 1)) r = i;
            if (at(r, n_ + 1) < -kEps) {
                pivot(r, n_);
                if (!run(1) || at(m_ + 1, n_ + 1) < -kEps) {
                    res.status = LpStatus::Infeasible;
                    return res;
                }
                for (int i = 0; i < m_; ++i) {
                    if (basis_[static_cast<std::size_t>(i)] != -1) continue;
                    int s = -1;
                    for (int j = 0; j <= n_; ++j)
                        if (s == -1 || at(i, j) < at(i, s) ||
                            (at(i, j) == at(i, s) && nonbasis_[static_cast<std::size_t>(j)] <
                                                         nonbasis_[static_cast<std::size_t>(s)]))
                            s = j;
                    pivot(i, s);
                }
            }
        }
        if (!run(2)) {
            res.status = LpStatus::Unbounded;
            res.value = std::numeric_limits<double>::infinity();
            return res;
        }
        res.status = LpStatus::Optimal;
        res.x.assign(static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[static_cast<std::size_t>(i)] < n_ && basis_[static_cast<std::size_t>(i)] >= 0)
                res.x[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = at(i, n_ + 1);
        res.value = at(m_, n_ + 1);
        return res;
    }

private:
    static constexpr double kEps = 1e-11;

    double& at(int i, int j) { return d_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

    void pivot(int r, int s) {
        const double inv = 1.0 / at(r, s);
        for (int i = 0; i < m_ + 2; ++i) {
            if (i == r) continue;
            const double f = at(i, s) * inv;
            if (f == 0.0) continue;
            for (int j = 0; j < n_ + 2; ++j)
                if (j != s) at(i, j) -= at(r, j) * f;
        }
        for (int j = 0; j < n_ + 2; ++j)
            if (j != s) at(r, j) *= inv;
        for (int i = 0; i < m_ + 2; ++i)
            if (i != r) at(i, s) *= -inv;
        at(r, s) = inv;
        std::swap(basis_[static_cast<std::size_t>(r)], nonbasis_[static_cast<std::size_t>(s)]);
    }

    bool run(int phase) {
        const int row = phase == 1 ? m_ + 1 : m_;
        for (int guard = 0; guard < 100000; ++guard) {
            int s = -1;
            for (int j = 0; j <= n_; ++j) {
                if (phase == 2 && nonbasis_[static_cast<std::size_t>(j)] == -1) continue;
                if (s == -1 || at(row, j) < at(row, s) ||
                    (at(row, j) == at(row, s) &&
                     nonbasis_[static_cast<std::size_t>(j)] < nonbasis_[static_cast<std::size_t>(s)]))
                    s = j;
            }
            if (s == -1 || at(row, s) > -kEps) return true;
            int r = -1;
            for (int i = 0; i < m_; ++i) {
                if (at(i, s) < kEps) continue;
                if (r == -1) {
                    r = i;
                    continue;
                }
                const double lhs = at(i, n_ + 1) / at(i, s), rhs = at(r, n_ + 1) / at(r, s);
                if (lhs < rhs || (lhs == rhs && basis_[static_cast<std::size_t>(i)] <
                                                    basis_[static_cast<std::size_t>(r)]))
                    r = i;
            }
            if (r == -1) return false;
            pivot(r, s);
        }
        return true;
    }

    int m_, n_;
    std::vector<int> basis_, nonbasis_;
    std::vector<std::vector<double>> d_;
};

inline LpResult lp_maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                            const std::vector<double>& c) {
    return Simplex(A, b, c).solve();
}

}  // namespace lf::detail
