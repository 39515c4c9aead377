#pragma once

/**
 * @file measure.hpp
 * @brief Sampling of stationary measures and evaluation of their Fourier transforms.
 *
 * Convention: e(y) = exp(-2 pi i y) and mu^(xi) = integral of e(xi x) dmu(x).
 */

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffl/ifs.hpp"
#include "ffl/rng.hpp"

namespace ffl {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// e(y) = exp(-2 pi i y).
inline Complex character(double y) {
    const double a = kTwoPi * (y - std::nearbyint(y));
    return {std::cos(a), -std::sin(a)};
}

enum class ErrorKind { Rigorous, Statistical };

std::string to_string(ErrorKind kind);

struct FourierValue {
    double xi = 0.0;
    Complex value{1.0, 0.0};
    /// Rigorous bound, or for statistical values z * stderr plus any bias bound.
    double error = 0.0;
    ErrorKind kind = ErrorKind::Rigorous;
    double standard_error = 0.0;
    double confidence_z = 0.0;
    /// The requested tolerance did not fit the word budget; `error` is what was achieved.
    bool budget_exhausted = false;
};

/// Default cylinder-visit budget per evaluation.
inline constexpr std::uint64_t kDefaultWordBudget = 50'000'000;

// ---------------------------------------------------------------------------
// Sampling

struct SampleOptions {
    /// Fixed word length; when unset, each draw stops once its composed
    /// convergence rate (times the sampling prefactor) is at most `tol`.
    std::optional<int> depth;
    double tol = 1e-12;
    int depth_cap = 4000;
};

struct SampleSet {
    int dim = 1;
    /// Row-major, `dim` coordinates per point.
    std::vector<double> coords;
    /// Generating prefix length of each point.
    std::vector<int> depth;
    /// Sup-metric distance bound between each point and the coding-map image of its full sequence.
    double achieved_tol = 0.0;

    std::size_t size() const { return depth.size(); }
    double at(std::size_t i, int c) const { return coords[i * dim + c]; }
    /// The last coordinate of every point.
    std::vector<double> last_coordinate() const;
};

/// n i.i.d. draws of the stationary measure, deterministic given seed.
/// Truncated countable systems draw from the renormalized represented weights.
SampleSet sample_points(const Cifs& cifs, std::size_t n, const SampleOptions& options, std::uint64_t seed);

/// Draws one real number from a stream.
using PointSampler = std::function<double(CounterRng&)>;

/// Sampler for the last coordinate of the stationary measure.
PointSampler measure_sampler(const Cifs& cifs, double tol = 1e-13);

// ---------------------------------------------------------------------------
// Fourier evaluators

struct MeasureMoments {
    double mean = 0.0;
    double variance = 0.0;
    /// sup |x - mean| over the attractor.
    double spread = 0.0;
};

/// Exact first two moments and hull spread of a 1-D affine stationary measure.
MeasureMoments affine_moments(const Cifs& cifs);

/// Rigorous mu^(xi) for a 1-D affine system by expansion over stopping cylinders.
/// Throws BudgetExhausted only if even a relaxed tolerance does not fit; otherwise
/// a relaxed result carries `budget_exhausted`.
FourierValue fourier_exact(const Cifs& cifs, double xi, double tol, std::uint64_t budget = kDefaultWordBudget);

/// Empirical character sums with an independent stream per frequency.
/// `bias` is added to every error bound (for example 2 pi |xi| times the sampling tolerance).
std::vector<FourierValue> fourier_montecarlo(const PointSampler& sampler, std::span<const double> xis,
                                             std::size_t m, std::uint64_t seed, double z = 4.0,
                                             std::function<double(double)> bias = {});

/// Infinite-product evaluation for systems sharing one ratio r.
FourierValue fourier_product_homogeneous(const Cifs& cifs, double xi, int factors);

// ---------------------------------------------------------------------------
// Frostman profile

struct FrostmanRow {
    double r = 0.0;
    double max_mass = 0.0;
    double argmax = 0.0;
    bool reliable = true;
};

struct FrostmanProfile {
    std::vector<FrostmanRow> rows;
    /// Log-log least-squares slope over the reliable rows.
    double slope = 0.0;
};

/// Max over x in x_grid of the empirical mass of [x - r, x + r].
FrostmanProfile frostman_profile(std::span<const double> samples, std::span<const double> r_grid,
                                 std::span<const double> x_grid);

// ---------------------------------------------------------------------------
// Cylinders

struct Cylinder {
    Word word;
    double weight = 0.0;
    std::vector<double> anchor;
    double diameter = 0.0;
};

struct CylinderDecomposition {
    std::vector<Cylinder> cylinders;
    /// Mass of words through omitted symbols: weights sum to 1 - tail_mass.
    double tail_mass = 0.0;
};

/// Stopping cylinders with diameter bound at most `max_diameter`; anchors are images of 0.
CylinderDecomposition cylinder_decomposition(const Cifs& cifs, double max_diameter,
                                             std::uint64_t budget = kDefaultWordBudget);

}  // namespace ffl
