#pragma once

/**
 * @file disintegration.hpp
 * @brief Equivalence classes on k-blocks of a fibre product, the random
 *        measures mu_omega, large-deviation membership and Erdos-Kahane diagnostics.
 *
 * Two words of length k are equivalent when they agree outside the slots
 * holding one of the two separated fibre symbols. A class therefore has
 * 2^(number of special slots) members sharing ratio, weight and base word.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffl/ifs.hpp"
#include "ffl/measure.hpp"
#include "ffl/rng.hpp"

namespace ffl {

struct EquivClass {
    /// Member with every special slot holding the first separated symbol
    /// (letters index FibreProduct::alphabet()).
    Word representative;
    std::vector<int> special_slots;
    /// Alphabet index of the second separated symbol.
    int second_symbol = -1;
    std::size_t size = 1;
    /// Common fibre ratio r_[a] and common member weight p_a.
    double ratio = 1.0;
    double member_weight = 1.0;
    /// q_[a] = p_a * #[a].
    double q = 1.0;
    /// Base map index of every slot.
    std::vector<int> base_word;
    /// Member translates, indexed by a bit mask over special slots (bit s set:
    /// slot special_slots[s] holds the second separated symbol).
    std::vector<double> translates;
    /// Canonical Erdos-Kahane pair: members 0 and 1 differ only in the first
    /// special slot. Classes of size 1 have no pair.
    double pair_gap() const { return size > 1 ? std::abs(translates[0] - translates[1]) : 0.0; }

    Word member(std::size_t mask) const;
};

struct ClassTable {
    int k = 1;
    std::vector<EquivClass> classes;
    /// Separated-pair weight p* and gap c, and the fibre Lyapunov exponent.
    double p_star = 0.0;
    double gap = 0.0;
    double lyapunov = 0.0;
    /// max |r_[a]| and max |t| over all classes.
    double max_ratio = 0.0;
    double max_translate = 0.0;
    /// Base maps, needed for base points x_omega.
    std::vector<ContractionMap> base_maps;
    /// Draws class indices under q.
    DiscreteSampler class_sampler;

    std::vector<double> weights() const;
};

inline constexpr std::uint64_t kDefaultClassBudget = 1'000'000;

/// Partition of A^k into classes with their q weights.
ClassTable build_classes(const FibreProduct& fp, int k, std::uint64_t budget = kDefaultClassBudget);

/// The line system of all fibre maps with their weights: its stationary
/// measure is the last-coordinate marginal of the fibre product measure.
Cifs fibre_marginal_system(const FibreProduct& fp);

// ---------------------------------------------------------------------------

/// Prefix of omega = ([a_1], [a_2], ...). Class i is drawn from its own
/// stream, so extending a prefix never changes earlier entries.
struct OmegaSample {
    std::uint64_t seed = 0;
    std::vector<int> classes;

    std::size_t size() const { return classes.size(); }
};

OmegaSample sample_omega(const ClassTable& table, std::size_t length, std::uint64_t seed);
/// Class index at position i (0-based) of the omega with this seed.
int omega_class(const ClassTable& table, std::uint64_t seed, std::size_t i);
/// Extends in place to at least `length` classes.
void extend_omega(const ClassTable& table, OmegaSample& omega, std::size_t length);

/// prod_{i<=m} r_[a_i] for m = 1..size.
std::vector<double> cumulative_ratios(const ClassTable& table, const OmegaSample& omega);

/// Base point psi_{j_1} o ... (0) over the prefix.
std::vector<double> omega_base_point(const ClassTable& table, const OmegaSample& omega);

/// Infinite-product transform of mu_omega truncated after `factors` classes.
FourierValue mu_omega_fourier(const ClassTable& table, const OmegaSample& omega, double xi, std::size_t factors);

/// Smallest truncation whose tail bound is at most tol, capped at `max_factors`
/// (the prefix is extended with the omega's own seed).
FourierValue mu_omega_fourier_tol(const ClassTable& table, const OmegaSample& omega, double xi, double tol,
                                  std::size_t max_factors = 10000);

/// Draws from mu_omega to within `tol` of the exact coding-map point.
std::vector<double> sample_mu_omega(const ClassTable& table, const OmegaSample& omega, std::size_t n,
                                    std::uint64_t seed, double tol = 1e-13);

// ---------------------------------------------------------------------------

struct ConsistencyRow {
    double xi = 0.0;
    Complex mean;
    double standard_error = 0.0;
    Complex reference;
    double reference_error = 0.0;
    double truncation_error = 0.0;
    double z_score = 0.0;
    bool pass = false;
};

struct ConsistencyReport {
    int k = 0;
    std::size_t n_omega = 0;
    std::vector<ConsistencyRow> rows;
    bool pass() const;
};

/// Mean of mu_omega^(xi) over sampled omegas against the rigorous transform of
/// the fibre marginal. Passes when |mean - reference| <= 4 stderr + rigorous parts.
ConsistencyReport disintegration_consistency(const FibreProduct& fp, int k, std::span<const double> xis,
                                             std::size_t n_omega, std::uint64_t seed, double tol = 1e-8);

// ---------------------------------------------------------------------------

struct LDParams {
    int k = 4;
    double alpha = 0.1;
    std::size_t n_start = 1;

    // Derived thresholds.
    double size_threshold() const;           // 2^{p* k}
    double dense_fraction() const;           // 1 - e^{-alpha k}
    double ratio_floor() const;              // exp(-e^{3 alpha k / 4})
    double p_star = 0.0;
    double lyapunov = 0.0;
    double gap = 0.0;

    /// eps* = c exp(-2 e^{3 alpha k / 4}) / 5.
    double eps_star() const;
};

LDParams make_ld_params(const ClassTable& table, double alpha, std::size_t n_start);

struct AlphaCalibration {
    double alpha = 0.0;
    /// Exact sum of q over classes with #[a] <= 2^{p* k}.
    double small_class_mass = 0.0;
    /// Monte Carlo estimate of the same mass and its draw count.
    double monte_carlo_mass = 0.0;
    std::size_t draws = 0;
    /// True when alpha came from the candidate list rather than the fallback.
    bool from_candidates = true;
};

/// Largest alpha in {0.05, 0.1, 0.2} with small-class mass <= e^{-2 alpha k};
/// falls back to -log(mass) / (2k).
AlphaCalibration calibrate_alpha(const ClassTable& table, std::uint64_t seed, std::size_t draws = 100000);

struct MembershipRow {
    std::size_t n = 0;
    bool omega1 = false, omega2 = false, omega3 = false, omega4 = false;
    bool all() const { return omega1 && omega2 && omega3 && omega4; }
};

struct MembershipReport {
    std::vector<MembershipRow> rows;
    bool omega1 = true, omega2 = true, omega3 = true, omega4 = true;
    bool omega_star() const { return omega1 && omega2 && omega3 && omega4; }
};

/// Evaluates the four defining inequalities for every N in [n_lo, n_hi].
MembershipReport check_omega_membership(const ClassTable& table, const OmegaSample& omega, const LDParams& params,
                                        std::size_t n_lo, std::size_t n_hi);

/// Fraction of sampled omegas failing membership over [params.n_start, n_hi].
double omega_star_failure_rate(const ClassTable& table, const LDParams& params, std::size_t n_hi,
                               std::size_t n_omega, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct DecayLevel {
    std::size_t index = 0;  // 1-based position i in omega
    double value = 0.0;     // xi * (t1 - t2) * prod_{j<i} r
    double p = 0.0;         // nearest integer
    double eps = 0.0;       // in [-1/2, 1/2)
    bool bad = false;       // |eps| <= eps*
};

struct EKDiagnostics {
    double T = 0.0;
    std::size_t n_omega = 0;  // N_omega
    double eps_star = 0.0;
    std::vector<DecayLevel> levels;
    std::vector<std::size_t> bad;  // indices into levels
    std::vector<std::string> warnings;
};

/// Decay levels, integer/fractional splits and Bad(xi) for one omega.
/// T defaults to max(|xi|, e); the prefix is extended as needed.
EKDiagnostics ek_diagnostics(const ClassTable& table, const OmegaSample& omega, double xi, const LDParams& params,
                             std::optional<double> T = std::nullopt);

/// Splits v = p + eps with p integer and eps in [-1/2, 1/2).
void split_nearest(double v, double& p, double& eps);

/// sqrt(1 - 2 p_min^2 (1 - cos delta)).
double circle_sum_bound(std::span<const double> weights, double delta);

}  // namespace ffl
