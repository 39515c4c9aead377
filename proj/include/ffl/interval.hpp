#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ffl {

/// Closed interval with outward-rounded arithmetic (one ulp per operation).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double v) : lo(v), hi(v) {}  // NOLINT: implicit point interval
    Interval(double l, double h) : lo(l), hi(h) {}

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }

    static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }
    static Interval entire() {
        return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
};

using Box = std::vector<Interval>;

namespace detail {
inline double down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
inline double up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
inline Interval widen(double lo, double hi) { return {down(lo), up(hi)}; }
}  // namespace detail

inline Interval operator+(Interval a, Interval b) { return detail::widen(a.lo + b.lo, a.hi + b.hi); }
inline Interval operator-(Interval a, Interval b) { return detail::widen(a.lo - b.hi, a.hi - b.lo); }
inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }

inline Interval operator*(Interval a, Interval b) {
    const double p[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return detail::widen(*std::min_element(p, p + 4), *std::max_element(p, p + 4));
}

inline Interval operator/(Interval a, Interval b) {
    if (b.contains_zero()) return Interval::entire();
    return a * detail::widen(1.0 / b.hi, 1.0 / b.lo);
}

inline Interval pow(Interval a, int n) {
    if (n == 0) return {1.0, 1.0};
    const double l = std::pow(a.lo, n);
    const double h = std::pow(a.hi, n);
    if (n % 2 == 1) return detail::widen(l, h);
    if (a.contains_zero()) return {0.0, detail::up(std::max(l, h))};
    return detail::widen(std::min(l, h), std::max(l, h));
}

inline Interval sqrt(Interval a) {
    if (a.hi < 0.0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    return {std::max(0.0, detail::down(std::sqrt(std::max(0.0, a.lo)))), detail::up(std::sqrt(a.hi))};
}

inline Interval exp(Interval a) { return {std::max(0.0, detail::down(std::exp(a.lo))), detail::up(std::exp(a.hi))}; }

inline Interval log(Interval a) {
    if (a.lo <= 0.0) return {-std::numeric_limits<double>::infinity(), detail::up(std::log(a.hi))};
    return detail::widen(std::log(a.lo), std::log(a.hi));
}

inline Interval cos(Interval a) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    constexpr double pi = 3.14159265358979323846;
    if (a.width() >= two_pi) return {-1.0, 1.0};
    double lo = std::min(std::cos(a.lo), std::cos(a.hi));
    double hi = std::max(std::cos(a.lo), std::cos(a.hi));
    // Extrema at multiples of pi inside the interval.
    const double k0 = std::ceil(a.lo / pi);
    for (double k = k0; k * pi <= a.hi; k += 1.0) {
        if (std::fmod(std::abs(k), 2.0) == 0.0) hi = 1.0;
        else lo = -1.0;
    }
    return {std::max(-1.0, detail::down(lo)), std::min(1.0, detail::up(hi))};
}

inline Interval sin(Interval a) {
    constexpr double half_pi = 1.57079632679489661923;
    return cos(a - Interval(half_pi));
}

}  // namespace ffl
