#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ffl {

/// Exact small rational, kept alongside doubles so that digit systems and
/// high-precision sampling can see the true parameter rather than its rounding.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

/// Normalizes sign and common factors. Throws ValidationError on a zero denominator.
Rational make_rational(std::int64_t num, std::int64_t den);

/// Parses "p/q", an integer, or a decimal/float literal. Decimal literals with
/// a short exact expansion ("0.25") become rationals; others yield nullopt in
/// `exact` but still produce a double.
struct ParsedNumber {
    double value = 0.0;
    std::optional<Rational> exact;
};

ParsedNumber parse_number(std::string_view text);

/// Exact product when it fits in 64 bits.
std::optional<Rational> checked_mul(const Rational& a, const Rational& b);
/// Exact a*b + c when it fits in 64 bits.
std::optional<Rational> checked_fma(const Rational& a, const Rational& b, const Rational& c);

std::string to_string(const Rational& r);

}  // namespace ffl
