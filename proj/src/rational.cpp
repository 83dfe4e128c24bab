#include "ppmc/rational.hpp"

#include <algorithm>

namespace ppmc {

std::optional<Rational> parse_rational(const std::string& text) {
    if (text.empty()) return std::nullopt;
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) {
            BigInt n(text);
            return Rational(n);
        }
        std::string num = text.substr(0, slash);
        std::string den = text.substr(slash + 1);
        if (num.empty() || den.empty()) return std::nullopt;
        BigInt n(num), d(den);
        if (d <= 0) return std::nullopt;
        return Rational(n, d);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string rational_to_string(const Rational& r) {
    BigInt num = boost::multiprecision::numerator(r);
    BigInt den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

Rational dyadic_floor(const Rational& r, unsigned bits) {
    BigInt scale = BigInt(1) << bits;
    BigInt num = boost::multiprecision::numerator(r) * scale;
    BigInt den = boost::multiprecision::denominator(r);
    BigInt q = num / den;
    if (num < 0 && q * den != num) --q; // trunc -> floor
    return Rational(q, scale);
}

Rational dyadic_ceil(const Rational& r, unsigned bits) {
    return -dyadic_floor(-r, bits);
}

unsigned least_power_below(const Rational& base, const Rational& target, unsigned hard_cap) {
    if (!(base > 0 && base < 1)) throw std::invalid_argument("least_power_below: base not in (0,1)");
    if (!(target > 0)) throw std::invalid_argument("least_power_below: target <= 0");
    Rational pow{1};
    for (unsigned n = 0; n <= hard_cap; ++n) {
        if (pow <= target) return n;
        pow *= base;
    }
    throw std::runtime_error("least_power_below: cap exceeded");
}

Interval Interval::operator*(const Interval& o) const {
    // all quantities in this project are nonnegative
    return Interval(lo * o.lo, hi * o.hi);
}

Interval Interval::meet(const Interval& o) const {
    Rational l = std::max(lo, o.lo);
    Rational h = std::min(hi, o.hi);
    if (l > h) throw std::runtime_error("interval meet: disjoint certified brackets");
    return Interval(l, h);
}

Interval interval_div(const Interval& a, const Interval& o, bool clamp01) {
    if (!(o.lo > 0)) throw std::invalid_argument("interval_div: denominator lower bound not positive");
    Rational l = a.lo / o.hi;
    Rational h = a.hi / o.lo;
    if (clamp01) {
        if (h > 1) h = 1;
        if (l > h) l = h;
    }
    return Interval(l, h);
}

} // namespace ppmc
