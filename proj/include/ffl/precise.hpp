#pragma once

/**
 * @file precise.hpp
 * @brief Reals carried exactly or to a chosen number of digits, so that
 *        orbits x -> b x mod 1 can be followed far beyond double precision.
 */

#include <cstddef>
#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "ffl/expr.hpp"
#include "ffl/ifs.hpp"
#include "ffl/rational.hpp"
#include "ffl/rng.hpp"

namespace ffl {

/// A point of [0,1] held either as an exact rational or as a base-c digit
/// string 0.d1 d2 ... dL. A digit string is exact when its tail is known to be
/// zero; otherwise only its first L digits are determined.
class PreciseReal {
public:
    static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

    static PreciseReal from_rational(Rational r);
    /// Exact binary expansion of a double in [0,1].
    static PreciseReal from_double(double x);
    static PreciseReal from_digits(int base, std::vector<std::uint8_t> digits, bool exact);

    bool exact() const;
    const Rational* rational() const { return std::get_if<Rational>(&repr_); }
    double to_double() const;

    /// Number of determined fractional digits in base b (kUnlimited when exact).
    std::size_t available_digits(int b) const;
    /// First m digits of frac(x) in base b. Throws BudgetExhausted (achieved =
    /// available digits) when m exceeds the determined precision.
    std::vector<std::uint8_t> digits(int b, std::size_t m) const;
    /// frac(x) to 128 bits.
    unsigned __int128 fraction128() const;

private:
    struct Digits {
        int base;
        std::vector<std::uint8_t> digits;
        bool exact;
    };
    explicit PreciseReal(std::variant<Rational, Digits> r) : repr_(std::move(r)) {}
    std::variant<Rational, Digits> repr_;
};

/// Affine line systems whose maps are x -> (x + k)/m with integer digits k.
/// Such measures are sampled digit by digit with no rounding at all.
struct DigitSystem {
    int base = 0;
    std::vector<int> digit;  // per symbol
};
std::optional<DigitSystem> as_digit_system(const Cifs& cifs);

/// A sample of an affine line measure determined to at least `bits` binary
/// digits. Digit systems are drawn digit by digit; other systems are composed
/// in MPFR arithmetic at bits + 64 working precision.
PreciseReal sample_precise(const Cifs& cifs, std::size_t bits, CounterRng& rng);

/// F(x) evaluated in MPFR at bits + 64 working precision, kept to `bits` binary digits.
PreciseReal apply_precise(const Expr& F, const PreciseReal& x, std::size_t bits);

}  // namespace ffl
