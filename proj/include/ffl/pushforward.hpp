#pragma once

/**
 * @file pushforward.hpp
 * @brief Fourier transforms of nonlinear pushforwards F mu, derivative norms,
 *        stopping words, zero covers, the Fourier sum split, sign-definite
 *        prefix decompositions and conjugated systems.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ffl/expr.hpp"
#include "ffl/ifs.hpp"
#include "ffl/measure.hpp"

namespace ffl {

/// A C^2 map F on [0,1]^dim with exact partials in the last coordinate.
class SmoothMapF {
public:
    SmoothMapF(Expr f, int dim);
    static SmoothMapF parse(std::string_view text, int dim = 1);

    int dim() const { return dim_; }
    const Expr& expr() const { return f_; }
    /// dF/dx_dim and d^2F/dx_dim^2.
    const Expr& d1() const { return d1_; }
    const Expr& d2() const { return d2_; }

    double operator()(std::span<const double> x) const { return f_.eval(x); }
    double operator()(double x) const { return f_.eval(x); }

private:
    Expr f_, d1_, d2_;
    int dim_;
};

struct MapNorms {
    double sup1 = 0.0;  // ||F||_{inf,1}
    double sup2 = 0.0;  // ||F||_{inf,2}
    double min2 = 0.0;  // ||F||_{min,2}
    bool certified = false;
    /// The second partial changes sign (or vanishes) on the grid.
    bool sign_change = false;
    std::size_t grid_points = 0;
};

/// Grid maxima/minima of the last-coordinate partials. With a Lipschitz
/// constant L for the second partial the results become certified bounds
/// (sup widened, min narrowed by L h / 2).
MapNorms map_norms(const SmoothMapF& F, int grid_resolution, std::optional<double> second_lipschitz = std::nullopt);

/// Throws ValidationError when the second partial is not bounded away from 0.
void require_nonvanishing_curvature(const MapNorms& norms);

/// Rigorous F mu^(xi) by expansion over cylinders.
FourierValue pushforward_fourier(const SmoothMapF& F, const Cifs& cifs, double xi, double tol,
                                 std::uint64_t budget = kDefaultWordBudget);

// ---------------------------------------------------------------------------

struct StoppingWord {
    Word word;
    double ratio = 1.0;  // |r_a|
    double weight = 1.0;
};

struct StoppingSet {
    double xi = 0.0;
    double delta = 0.0;
    std::vector<StoppingWord> words;
};

/// W(xi): words with prod |r| <= |xi|^{-delta} < prod over the proper prefix.
StoppingSet stopping_words(const Cifs& cifs, double xi, double delta, std::uint64_t budget = kDefaultWordBudget);

// ---------------------------------------------------------------------------

struct ZeroCover {
    std::vector<double> zeros;
    std::vector<int> multiplicity;
    /// Leading local coefficients F^{(k_i)}(x_i) / k_i!.
    std::vector<double> local_coefficient;
    double C = 0.0;
    int k = 0;
    /// Largest r in the requested list up to which every radius verified.
    double r_max = 0.0;
    std::vector<double> radii;
    std::vector<char> verified;

    /// Does x lie in the union of balls B(x_i, C r^{1/k})?
    bool covers(double x, double r) const;
};

/// Zeros of a one-variable polynomial in [0,1] with multiplicities, and the
/// level-set cover {|F| < r} inside the union of B(x_i, C r^{1/k}).
ZeroCover zero_cover(const Expr& polynomial, std::span<const double> r_list);

struct SplitFourier {
    double xi = 0.0;
    Complex good_sum, bad_sum;
    double good_error = 0.0, bad_error = 0.0;
    double bad_mass = 0.0;
    double radius = 0.0;  // C |xi|^{-delta'}
    std::vector<double> centres;
    std::size_t good_words = 0, bad_words = 0;
    /// Independent full evaluation and the gap to good + bad.
    FourierValue full;
    double reconstruction_gap = 0.0;
    bool consistent = false;
};

/// Splits the stopping-word expansion by whether a cylinder meets a
/// C |xi|^{-delta'}-neighbourhood of the zeros of F' and F''.
SplitFourier split_fourier(const SmoothMapF& F, const Cifs& cifs, double xi, double delta, double delta_prime,
                           double tol);

// ---------------------------------------------------------------------------

struct PrefixDecomposition {
    std::vector<Word> words;
    double covered_mass = 0.0;
    double uncovered_mass = 0.0;
    int depth_cap = 0;
};

/// Minimal prefixes whose cylinder image carries a sign-definite second partial.
PrefixDecomposition prefix_decomposition(const SmoothMapF& F, const Cifs& cifs, int depth_cap,
                                         std::uint64_t budget = kDefaultWordBudget);

// ---------------------------------------------------------------------------

struct ConjugateResult {
    Cifs system;
    /// Two-sample KS distance between F-pushed samples of the affine measure
    /// and samples of the conjugated system (negative when not verified).
    double ks_distance = -1.0;
    std::size_t samples = 0;
};

/// F o psi_a o F^{-1} for every map of an affine line system.
ConjugateResult conjugate_ifs(const Cifs& psi, const SmoothMapF& F, const Expr& inverse, std::size_t verify_samples,
                              std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace ffl
