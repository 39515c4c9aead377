#include "ffl/rational.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "ffl/error.hpp"

namespace ffl {

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw ValidationError("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return {num, den};
}

namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace

ParsedNumber parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw ValidationError("empty numeric literal");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto n = parse_int(trim(text.substr(0, slash)));
        auto d = parse_int(trim(text.substr(slash + 1)));
        if (!n || !d) throw ValidationError("malformed rational literal '" + std::string(text) + "'");
        Rational r = make_rational(*n, *d);
        return {r.value(), r};
    }
    if (auto i = parse_int(text)) return {static_cast<double>(*i), Rational{*i, 1}};

    // Decimal literal: exact when the fractional part is short.
    std::string buf(text);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(v))
        throw ValidationError("malformed numeric literal '" + buf + "'");
    ParsedNumber out{v, std::nullopt};
    const auto dot = buf.find('.');
    if (dot != std::string::npos && buf.find_first_of("eE") == std::string::npos) {
        std::string digits = buf.substr(0, dot) + buf.substr(dot + 1);
        const auto frac_len = buf.size() - dot - 1;
        if (frac_len <= 15 && digits.size() <= 17) {
            if (auto n = parse_int(digits)) {
                std::int64_t den = 1;
                for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
                out.exact = make_rational(*n, den);
            }
        }
    }
    return out;
}

std::optional<Rational> checked_mul(const Rational& a, const Rational& b) {
    std::int64_t n = 0;
    std::int64_t d = 0;
    if (__builtin_mul_overflow(a.num, b.num, &n) || __builtin_mul_overflow(a.den, b.den, &d))
        return std::nullopt;
    return make_rational(n, d);
}

std::optional<Rational> checked_fma(const Rational& a, const Rational& b, const Rational& c) {
    auto ab = checked_mul(a, b);
    if (!ab) return std::nullopt;
    std::int64_t l = 0;
    std::int64_t r = 0;
    std::int64_t d = 0;
    if (__builtin_mul_overflow(ab->num, c.den, &l) || __builtin_mul_overflow(c.num, ab->den, &r) ||
        __builtin_mul_overflow(ab->den, c.den, &d))
        return std::nullopt;
    std::int64_t n = 0;
    if (__builtin_add_overflow(l, r, &n)) return std::nullopt;
    return make_rational(n, d);
}

std::string to_string(const Rational& r) {
    if (r.den == 1) return std::to_string(r.num);
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

}  // namespace ffl
