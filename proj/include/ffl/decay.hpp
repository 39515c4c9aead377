#pragma once

/**
 * @file decay.hpp
 * @brief Band maxima of |transform|, decay-exponent fits, sparse-frequency
 *        covering counts and probes along frequency families.
 */

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ffl/measure.hpp"
#include "ffl/pushforward.hpp"

namespace ffl {

/// A transform evaluator xi -> value with error bound. Must be thread-safe.
using Evaluator = std::function<FourierValue(double)>;

Evaluator measure_evaluator(const Cifs& cifs, double tol, std::uint64_t budget = kDefaultWordBudget);
Evaluator pushforward_evaluator(const SmoothMapF& F, const Cifs& cifs, double tol,
                                std::uint64_t budget = kDefaultWordBudget);

struct BandMax {
    int j = 0;
    double lo = 0.0, hi = 0.0;  // [T_j, 2 T_j)
    double max_abs = 0.0;
    double max_error = 0.0;  // largest error bound among the sampled values
    double argmax = 0.0;
    std::size_t samples = 0;
    std::size_t excluded = 0;  // evaluations that ran out of budget
};

/// Bands [T_j, 2T_j) with T_j = base^j. Each band is sampled on the grid
/// T_j (1 + i/S), i < S, together with S golden-ratio Kronecker points shifted
/// by a seed-derived offset; doubling S only adds frequencies.
std::vector<BandMax> band_maxima(const Evaluator& eval, double base, int j_lo, int j_hi,
                                 std::size_t samples_per_band, std::uint64_t seed);

struct DecayFit {
    double eta = 0.0;
    double C = 0.0;
    double eta_se = 0.0;
    double r2 = 0.0;
    std::size_t used = 0;
    std::vector<int> excluded_bands;
};

/// Least squares of log(max) on log(T_j); eta = -slope.
DecayFit fit_eta(const std::vector<BandMax>& bands);

struct SparseCover {
    double T = 0.0;
    double epsilon = 0.0;
    double grid_step = 0.0;
    std::size_t count = 0;
    std::size_t evaluations = 0;
    /// Marked unit intervals [m, m+1), ascending.
    std::vector<long> marked;
};

/// Unit intervals [m, m+1) meeting [-T, T] that contain a grid point with
/// |value| + error >= T^-epsilon. The transform of a real measure satisfies
/// |v(-xi)| = |v(xi)|, so only xi >= 0 is evaluated.
SparseCover sparse_cover(const Evaluator& eval, double T, double epsilon, double grid_step = 0.25);

struct GrowthFit {
    double exponent = 0.0;
    double se = 0.0;
};

/// Slope of log(count) against log(T).
GrowthFit growth_exponent(const std::vector<SparseCover>& covers);

/// b^n for n in [n_lo, n_hi].
std::vector<double> geometric_family(double base, int n_lo, int n_hi);

std::vector<FourierValue> rajchman_probe(const Evaluator& eval, const std::vector<double>& family);

/// Standalone 800x600 log-log polyline chart.
struct Series {
    std::string label;
    std::vector<double> x, y;
};
std::string loglog_svg(const std::string& title, const std::vector<Series>& series);

}  // namespace ffl
