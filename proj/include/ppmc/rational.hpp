#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ppmc {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational arithmetic over unbounded integers. The semantic core
/// never touches floating point.
using Rational = boost::multiprecision::cpp_rational;

inline const Rational& rat_zero() {
    static const Rational z{0};
    return z;
}

inline const Rational& rat_one() {
    static const Rational o{1};
    return o;
}

/// Parses "a", "-a" or "a/b" with b > 0. Returns nullopt on malformed input.
std::optional<Rational> parse_rational(const std::string& text);

/// Lowest-terms "a/b" (or "a" for integers). cpp_rational keeps values
/// normalized, so this is just formatting.
std::string rational_to_string(const Rational& r);

/// Largest multiple of 2^-bits that is <= r.
Rational dyadic_floor(const Rational& r, unsigned bits);

/// Smallest multiple of 2^-bits that is >= r.
Rational dyadic_ceil(const Rational& r, unsigned bits);

/// floor(log2(1/r)) style helper: the least n >= 0 with base^n <= target,
/// for 0 < base < 1 and target in (0,1]. Exact integer powering only.
unsigned least_power_below(const Rational& base, const Rational& target,
                           unsigned hard_cap = 1u << 20);

struct Interval {
    Rational lo;
    Rational hi;

    Interval() : lo(0), hi(1) {}
    Interval(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo > hi) throw std::invalid_argument("interval: lo > hi");
    }

    static Interval point(const Rational& v) { return Interval(v, v); }

    Rational width() const { return hi - lo; }
    bool contains(const Rational& v) const { return lo <= v && v <= hi; }

    Interval operator+(const Interval& o) const { return Interval(lo + o.lo, hi + o.hi); }
    Interval operator*(const Interval& o) const;
    /// 1 - x with endpoints swapped.
    Interval complement() const { return Interval(1 - hi, 1 - lo); }

    /// Intersection; throws if the intervals are disjoint.
    Interval meet(const Interval& o) const;

    bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

/// Division for nonnegative intervals with o.lo > 0; result clamped to [0,1]
/// when clamp01 is set (probability ratios).
Interval interval_div(const Interval& a, const Interval& o, bool clamp01 = true);

} // namespace ppmc
