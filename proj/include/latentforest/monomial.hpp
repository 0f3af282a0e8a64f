#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "latentforest/error.hpp"
#include "latentforest/rational.hpp"

namespace lf {

/// Real log-canonical threshold paired with its multiplicity.
struct Rlct {
    Rational lambda;
    int mult = 1;

    friend bool operator==(const Rlct& a, const Rlct& b) {
        return a.lambda == b.lambda && a.mult == b.mult;
    }
    std::string str() const { return "lambda=" + lambda.str() + " mult=" + std::to_string(mult); }
    friend std::ostream& operator<<(std::ostream& os, const Rlct& r) { return os << r.str(); }
};

/// Closed interval; endpoints may be infinite.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const { return lo <= x && x <= hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    double width() const { return hi - lo; }
};

/// One summand (w^u - c)^2 of a monomial sum of squares.
struct MonomialTerm {
    std::vector<int> u;
    double c = 0.0;
};

/**
 * Phase function H(w) = sum_i (w^{u_i} - c_i)^2 on a box domain.
 * `names` optionally labels the coordinates.
 */
struct MonomialSos {
    int dim = 0;
    std::vector<MonomialTerm> terms;
    std::vector<Interval> domain;
    std::vector<std::string> names;

    void validate() const {
        if (dim < 0) throw InvalidArgument("negative dimension");
        if (static_cast<int>(domain.size()) != dim)
            throw InvalidArgument("domain must have one interval per coordinate");
        if (!names.empty() && static_cast<int>(names.size()) != dim)
            throw InvalidArgument("names must label every coordinate");
        for (const Interval& iv : domain)
            if (!(iv.lo < iv.hi)) throw InvalidArgument("domain intervals need lo < hi");
        for (const MonomialTerm& t : terms) {
            if (static_cast<int>(t.u.size()) != dim)
                throw InvalidArgument("exponent vector length differs from dimension");
            for (int x : t.u)
                if (x < 0) throw InvalidArgument("exponents must be nonnegative");
            if (!std::isfinite(t.c)) throw InvalidArgument("non-finite constant");
        }
    }

    double evaluate(const std::vector<double>& w) const {
        double h = 0.0;
        for (const MonomialTerm& t : terms) {
            double m = 1.0;
            for (int j = 0; j < dim; ++j)
                for (int p = 0; p < t.u[static_cast<std::size_t>(j)]; ++p) m *= w[static_cast<std::size_t>(j)];
            h += (m - t.c) * (m - t.c);
        }
        return h;
    }
};

}  // namespace lf
