#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "latentforest/error.hpp"

namespace lf {

namespace detail {

inline std::int64_t narrow_checked(__int128 v) {
    if (v > INT64_MAX || v < -INT64_MAX)
        throw ArithmeticOverflow("64-bit overflow in exact arithmetic");
    return static_cast<std::int64_t>(v);
}

inline std::int64_t mul_checked(std::int64_t a, std::int64_t b) {
    return narrow_checked(static_cast<__int128>(a) * b);
}

inline std::int64_t add_checked(std::int64_t a, std::int64_t b) {
    return narrow_checked(static_cast<__int128>(a) + b);
}

}  // namespace detail

/// Exact rational number over checked 64-bit integers; always normalized
/// with a positive denominator.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit by design of arithmetic
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
        if (d == 0) throw InvalidArgument("zero denominator");
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    bool is_integer() const { return den_ == 1; }
    int sign() const { return (num_ > 0) - (num_ < 0); }

    /// "p/q", or just "p" when the denominator is one.
    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const std::int64_t g = std::gcd(a.den_, b.den_);
        __int128 n = static_cast<__int128>(a.num_) * (b.den_ / g) +
                     static_cast<__int128>(b.num_) * (a.den_ / g);
        __int128 d = static_cast<__int128>(a.den_ / g) * b.den_;
        return from_wide(n, d);
    }
    friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        const std::int64_t g1 = std::gcd(a.num_, b.den_) == 0 ? 1 : std::gcd(a.num_, b.den_);
        const std::int64_t g2 = std::gcd(b.num_, a.den_) == 0 ? 1 : std::gcd(b.num_, a.den_);
        __int128 n = static_cast<__int128>(a.num_ / g1) * (b.num_ / g2);
        __int128 d = static_cast<__int128>(a.den_ / g2) * (b.den_ / g1);
        return from_wide(n, d);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw InvalidArgument("division by zero");
        return a * Rational(b.den_, b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const __int128 l = static_cast<__int128>(a.num_) * b.den_;
        const __int128 r = static_cast<__int128>(b.num_) * a.den_;
        return l <=> r;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    static Rational from_wide(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n, b = d;
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        if (a > 1) { n /= a; d /= a; }
        Rational r;
        r.num_ = detail::narrow_checked(n);
        r.den_ = detail::narrow_checked(d);
        return r;
    }

    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        const std::int64_t g = std::gcd(num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace lf
