#pragma once

/**
 * @file equidist.hpp
 * @brief Counting functions #{n <= N : ||q_n x - gamma|| <= psi(n)}, Weyl sums
 *        and base-b digit frequencies for points given to high precision.
 */

#include <cstdint>
#include <vector>

#include "ffl/expr.hpp"
#include "ffl/measure.hpp"
#include "ffl/precise.hpp"

namespace ffl {

/// The multiplier sequence (q_n), n = 1, 2, ...
class Sequence {
public:
    enum class Kind { Geometric, Lacunary, Gapped };

    /// q_n = b^n.
    static Sequence geometric(int base);
    /// Natural numbers with q_{n+1}/q_n > K > 1 for every n.
    static Sequence lacunary(std::vector<std::uint64_t> q, double K);
    /// Positive reals with q_{n+1} - q_n >= gap > 0.
    static Sequence gapped(std::vector<double> q, double gap);
    /// q_n = n.
    static Sequence arithmetic(std::size_t N);

    Kind kind() const { return kind_; }
    int base() const { return base_; }
    /// Largest N the sequence supports (unbounded for geometric).
    std::size_t length() const;
    const std::vector<std::uint64_t>& integers() const { return ints_; }
    const std::vector<double>& reals() const { return reals_; }

private:
    Kind kind_ = Kind::Geometric;
    int base_ = 2;
    std::vector<std::uint64_t> ints_;
    std::vector<double> reals_;
};

struct EquidistSpec {
    Sequence sequence = Sequence::geometric(2);
    double gamma = 0.0;
    /// psi as an expression in the variable n (written x).
    Expr psi = Expr::constant(0.0);
    std::size_t N = 0;
};

/// psi(1..N), validated to lie in [0, 1/2].
std::vector<double> psi_values(const Expr& psi, std::size_t N);

/// Sigma(N) = psi(1) + ... + psi(N), compensated.
double sigma(const Expr& psi, std::size_t N);

struct CountResult {
    std::size_t N = 0;
    std::size_t count = 0;
    double sigma = 0.0;
    double two_sigma = 0.0;
    double epsilon = 1.0;
    /// (count - 2 Sigma) / (Sigma^{1/2} log(Sigma+2)^{2+eps}): the geometric-sequence scale.
    double deviation = 0.0;
    /// Same numerator over Sigma^{2/3} log(Sigma+2)^{2+eps}: the lacunary scale.
    double deviation_lacunary = 0.0;
};

/// frac(q_n x), n = 1..N, each to about 2^-60.
std::vector<double> orbit(const PreciseReal& x, const Sequence& seq, std::size_t N);

CountResult count_hits(const PreciseReal& x, const EquidistSpec& spec, double epsilon = 1.0);

/// |1/N sum_n e(h q_n x)| for h = 1..H.
std::vector<double> weyl_sums(const PreciseReal& x, const Sequence& seq, std::size_t N, int H);

struct DigitFrequency {
    int base = 2;
    std::vector<std::uint8_t> digits;
    std::vector<std::size_t> histogram;
    double chi_square = 0.0;
    double frequency(int d) const;
};

DigitFrequency digit_freq(const PreciseReal& x, int base, std::size_t N);

/// Binary digits needed so that orbit() can serve N terms of `seq`.
std::size_t bits_needed(const Sequence& seq, std::size_t N);

}  // namespace ffl
