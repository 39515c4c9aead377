#include "ffl/pushforward.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ffl/error.hpp"
#include "ffl/parallel.hpp"

namespace ffl {

SmoothMapF::SmoothMapF(Expr f, int dim) : f_(std::move(f)), dim_(dim) {
    if (dim < 1) throw ValidationError("map dimension must be at least 1");
    if (f_.max_variable() >= dim)
        throw ValidationError("map uses a variable beyond its dimension " + std::to_string(dim));
    d1_ = f_.derivative(dim - 1);
    d2_ = d1_.derivative(dim - 1);
}

SmoothMapF SmoothMapF::parse(std::string_view text, int dim) { return SmoothMapF(Expr::parse(text), dim); }

MapNorms map_norms(const SmoothMapF& F, int grid_resolution, std::optional<double> second_lipschitz) {
    if (grid_resolution < 256) throw ValidationError("grid resolution must be at least 2^8 per axis");
    const int d = F.dim();
    int per_axis = grid_resolution;
    while (std::pow(static_cast<double>(per_axis + 1), d) > double(1 << 24)) per_axis /= 2;
    const double h = 1.0 / per_axis;
    MapNorms out;
    out.sup1 = 0.0;
    out.sup2 = 0.0;
    out.min2 = std::numeric_limits<double>::infinity();
    bool pos = false, neg = false, zero = false;
    std::vector<int> idx(d, 0);
    std::vector<double> pt(d);
    while (true) {
        for (int i = 0; i < d; ++i) pt[i] = idx[i] * h;
        const double a = F.d1().eval(pt);
        const double b = F.d2().eval(pt);
        if (!std::isfinite(a) || !std::isfinite(b))
            throw ValidationError("map derivatives are not finite on the domain");
        out.sup1 = std::max(out.sup1, std::abs(a));
        out.sup2 = std::max(out.sup2, std::abs(b));
        out.min2 = std::min(out.min2, std::abs(b));
        pos = pos || b > 0.0;
        neg = neg || b < 0.0;
        zero = zero || b == 0.0;
        ++out.grid_points;
        int k = 0;
        while (k < d && ++idx[k] > per_axis) idx[k++] = 0;
        if (k == d) break;
    }
    out.sign_change = (pos && neg) || zero;
    if (out.sign_change) out.min2 = 0.0;
    if (second_lipschitz) {
        const double slack = *second_lipschitz * h / 2.0;
        out.sup2 += slack;
        out.sup1 += out.sup2 * h / 2.0;
        out.min2 = std::max(0.0, out.min2 - slack);
        out.certified = true;
    }
    return out;
}

void require_nonvanishing_curvature(const MapNorms& norms) {
    if (norms.sign_change || !(norms.min2 > 0.0))
        throw ValidationError("the second partial of F vanishes on the domain: curvature hypothesis violated");
}

// ---------------------------------------------------------------------------

namespace {

struct Partial {
    Complex sum{0.0, 0.0};
    double error = 0.0;
    double covered = 0.0;
    bool complete = true;
};

/// Cylinder expansion of integral e(xi F) d(phi_w mu) for 1-D affine systems.
class AffineExpander {
public:
    AffineExpander(const SmoothMapF& F, const Cifs& cifs, double xi)
        : F_(F), xi_(xi), r_(cifs.ratios()), t_(cifs.translates()), p_(cifs.weights()) {
        if (cifs.tail_mass() > 0.0) {
            mom_.mean = 0.5;
            mom_.spread = 0.5;
            mom_.variance = std::numeric_limits<double>::infinity();
            hull_ = {0.0, 1.0};
        } else {
            mom_ = affine_moments(cifs);
            hull_ = attractor_hull(cifs);
        }
    }

    const Interval& hull() const { return hull_; }

    /// Error bound and anchor value for the cylinder phi(x) = r x + t.
    double leaf_error(double r, double t, double& anchor_value) const {
        const Interval cyl = Interval::hull(t + r * hull_.lo, t + r * hull_.hi);
        const double c = r * mom_.mean + t;
        anchor_value = F_(c);
        const double g1 = F_.d1().eval(cyl).mag();
        const double first = kTwoPi * std::abs(xi_) * g1 * std::abs(r) * mom_.spread;
        double second = std::numeric_limits<double>::infinity();
        if (std::isfinite(mom_.variance)) {
            const double g2 = F_.d2().eval(cyl).mag();
            const double f1 = std::abs(F_.d1().eval(c));
            const double rv = r * r * mom_.variance;
            second = 0.5 * kTwoPi * std::abs(xi_) * g2 * rv + 0.5 * kTwoPi * kTwoPi * xi_ * xi_ * f1 * f1 * rv;
        }
        const double e = std::min(first, second);
        return std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
    }

    Partial run(double r0, double t0, double p0, double tol, std::uint64_t budget, std::uint64_t& visits) const {
        struct Frame {
            double r, t, p;
        };
        Partial out;
        Complex comp{0.0, 0.0};
        auto emit = [&](double p, double value, double err) {
            const Complex term = p * character(xi_ * value) - comp;
            const Complex next = out.sum + term;
            comp = (next - out.sum) - term;
            out.sum = next;
            out.error += p * err;
            out.covered += p;
        };
        double v0 = 0.0;
        const double e0 = leaf_error(r0, t0, v0);
        if (e0 <= tol) {
            emit(p0, v0, e0);
            return out;
        }
        std::vector<Frame> stack{{r0, t0, p0}};
        while (!stack.empty()) {
            const Frame f = stack.back();
            stack.pop_back();
            for (std::size_t a = 0; a < r_.size(); ++a) {
                if (++visits > budget) {
                    out.complete = false;
                    return out;
                }
                const double rr = f.r * r_[a];
                const double tt = f.r * t_[a] + f.t;
                const double pp = f.p * p_[a];
                double value = 0.0;
                const double err = leaf_error(rr, tt, value);
                if (err <= tol) emit(pp, value, err);
                else stack.push_back({rr, tt, pp});
            }
        }
        return out;
    }

private:
    const SmoothMapF& F_;
    double xi_;
    std::vector<double> r_, t_, p_;
    MeasureMoments mom_;
    Interval hull_;
};

/// First-order interval expansion for general systems on [0,1]^d.
Partial run_general(const SmoothMapF& F, const Cifs& cifs, double xi, double tol, std::uint64_t budget) {
    const int d = cifs.dim();
    const Box root(d, Interval(0.0, 1.0));
    std::vector<double> centre(d, 0.5);
    struct Frame {
        ContractionMap map;
        double p;
    };
    Partial out;
    std::vector<double> anchor(d);
    std::uint64_t visits = 0;
    auto try_leaf = [&](const ContractionMap& m, double p) {
        const Box box = m.image(root);
        const Interval range = F.expr().eval(std::span<const Interval>(box));
        m.apply(centre, anchor);
        const double v = F(anchor);
        const double err = kTwoPi * std::abs(xi) * std::max(range.hi - v, v - range.lo);
        if (!(err <= tol)) return false;
        out.sum += p * character(xi * v);
        out.error += p * err;
        out.covered += p;
        return true;
    };
    const auto id = ContractionMap::identity(d);
    if (try_leaf(id, 1.0)) return out;
    std::vector<Frame> stack;
    for (std::size_t a = 0; a < cifs.size(); ++a) stack.push_back({cifs.symbol(a).map, cifs.symbol(a).weight});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        if (++visits > budget) {
            out.complete = false;
            return out;
        }
        if (try_leaf(f.map, f.p)) continue;
        for (std::size_t a = 0; a < cifs.size(); ++a)
            stack.push_back({f.map.after(cifs.symbol(a).map), f.p * cifs.symbol(a).weight});
    }
    return out;
}

void check_dims(const SmoothMapF& F, const Cifs& cifs) {
    if (F.dim() != cifs.dim())
        throw ValidationError("map dimension " + std::to_string(F.dim()) + " does not match the system dimension " +
                              std::to_string(cifs.dim()));
}

}  // namespace

FourierValue pushforward_fourier(const SmoothMapF& F, const Cifs& cifs, double xi, double tol, std::uint64_t budget) {
    check_dims(F, cifs);
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    FourierValue v;
    v.xi = xi;
    if (xi == 0.0) return v;
    const bool affine = cifs.is_affine_line();
    std::optional<AffineExpander> ex;
    if (affine) ex.emplace(F, cifs, xi);
    double level = tol;
    for (int attempt = 0; attempt < 40; ++attempt, level *= 4.0) {
        Partial res;
        if (affine) {
            std::uint64_t visits = 0;
            res = ex->run(1.0, 0.0, 1.0, level, budget, visits);
        } else {
            res = run_general(F, cifs, xi, level, budget);
        }
        if (!res.complete) continue;
        v.value = res.sum;
        v.error = res.error + std::max(0.0, 1.0 - res.covered) + 1e-15 * (1.0 + std::abs(xi));
        v.budget_exhausted = attempt > 0;
        // |value| <= 1, so a bound of 2 or more says nothing.
        if (v.error >= 2.0) throw BudgetExhausted("pushforward_fourier: the word budget only allows a vacuous error bound", v.error);
        return v;
    }
    throw BudgetExhausted("pushforward_fourier: no tolerance fits the word budget", 2.0);
}

// ---------------------------------------------------------------------------

namespace {

double letter_ratio(const Symbol& s) {
    const auto& m = s.map;
    if (m.kind() == ContractionMap::Kind::Affine) return std::abs(m.as_affine().ratio);
    return m.lipschitz();
}

}  // namespace

StoppingSet stopping_words(const Cifs& cifs, double xi, double delta, std::uint64_t budget) {
    if (!(std::abs(xi) > 1.0)) throw ValidationError("stopping words need |xi| > 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
    const double threshold = std::pow(std::abs(xi), -delta);
    std::vector<double> ratio;
    for (const auto& s : cifs.symbols()) ratio.push_back(letter_ratio(s));
    if (*std::max_element(ratio.begin(), ratio.end()) >= 1.0)
        throw ValidationError("stopping words need every ratio below 1");
    StoppingSet out;
    out.xi = xi;
    out.delta = delta;
    struct Frame {
        Word word;
        double r, p;
    };
    std::vector<Frame> stack;
    for (std::size_t a = cifs.size(); a-- > 0;)
        stack.push_back({Word{{static_cast<int>(a)}}, ratio[a], cifs.symbol(a).weight});
    std::uint64_t visits = 0;
    while (!stack.empty()) {
        if (++visits > budget) throw BudgetExhausted("stopping-word enumeration exceeded the budget", threshold);
        Frame f = std::move(stack.back());
        stack.pop_back();
        if (f.r <= threshold) {
            out.words.push_back({std::move(f.word), f.r, f.p});
            continue;
        }
        for (std::size_t a = cifs.size(); a-- > 0;)
            stack.push_back({f.word.then(Word{{static_cast<int>(a)}}), f.r * ratio[a], f.p * cifs.symbol(a).weight});
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

using Poly = std::vector<double>;

Poly differentiate(const Poly& p) {
    Poly d;
    for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * static_cast<double>(i));
    if (d.empty()) d.push_back(0.0);
    return d;
}

double horner(const Poly& p, double x) {
    double v = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
    return v;
}

bool identically_zero(const Poly& p) {
    return std::all_of(p.begin(), p.end(), [](double c) { return c == 0.0; });
}

/// Refines a simple root of q near x by bisection when a sign change brackets it.
double refine(const Poly& q, double x, double width) {
    double lo = x - width, hi = x + width;
    double flo = horner(q, lo), fhi = horner(q, hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) return x;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = horner(q, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

bool ZeroCover::covers(double x, double r) const {
    const double radius = C * std::pow(r, 1.0 / std::max(k, 1));
    for (double z : zeros)
        if (std::abs(x - z) < radius) return true;
    return false;
}

ZeroCover zero_cover(const Expr& polynomial, std::span<const double> r_list) {
    if (polynomial.max_variable() > 0)
        throw ValidationError("zero cover needs a polynomial in one variable");
    Poly p = polynomial.polynomial_coefficients(0);
    if (identically_zero(p)) throw ValidationError("zero cover of the zero polynomial is undefined");
    const int n = static_cast<int>(p.size()) - 1;
    ZeroCover out;
    if (n >= 1) {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
        for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) companion(i, n - 1) = -p[i] / p[n];
        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
        std::vector<std::complex<double>> roots;
        for (int i = 0; i < n; ++i) roots.push_back(solver.eigenvalues()[i]);
        // Cluster eigenvalues: a root of multiplicity m splits into m nearby eigenvalues.
        constexpr double cluster_radius = 1e-3;
        std::vector<int> group(n, -1);
        int groups = 0;
        for (int i = 0; i < n; ++i) {
            if (group[i] >= 0) continue;
            group[i] = groups;
            for (bool grown = true; grown;) {
                grown = false;
                for (int j = 0; j < n; ++j) {
                    if (group[j] >= 0) continue;
                    for (int l = 0; l < n; ++l)
                        if (group[l] == groups && std::abs(roots[j] - roots[l]) < cluster_radius) {
                            group[j] = groups;
                            grown = true;
                            break;
                        }
                }
            }
            ++groups;
        }
        std::vector<Poly> derivs{p};
        for (int i = 0; i < n; ++i) derivs.push_back(differentiate(derivs.back()));
        for (int g = 0; g < groups; ++g) {
            std::complex<double> centroid{0.0, 0.0};
            int m = 0;
            for (int i = 0; i < n; ++i)
                if (group[i] == g) {
                    centroid += roots[i];
                    ++m;
                }
            centroid /= static_cast<double>(m);
            if (std::abs(centroid.imag()) > 1e-6) continue;
            double x = centroid.real();
            if (x < -1e-9 || x > 1.0 + 1e-9) continue;
            x = refine(derivs[m - 1], x, cluster_radius);
            x = std::clamp(x, 0.0, 1.0);
            double fact = 1.0;
            for (int i = 2; i <= m; ++i) fact *= i;
            const double a = horner(derivs[m], x) / fact;
            out.zeros.push_back(x);
            out.multiplicity.push_back(m);
            out.local_coefficient.push_back(a);
        }
        std::vector<std::size_t> order(out.zeros.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto i, auto j) { return out.zeros[i] < out.zeros[j]; });
        auto permute = [&](auto& v) {
            auto copy = v;
            for (std::size_t i = 0; i < order.size(); ++i) v[i] = copy[order[i]];
        };
        permute(out.zeros);
        permute(out.multiplicity);
        permute(out.local_coefficient);
    }
    for (std::size_t i = 0; i < out.zeros.size(); ++i) {
        out.k = std::max(out.k, out.multiplicity[i]);
        out.C = std::max(out.C, 2.0 * std::pow(1.0 / std::abs(out.local_coefficient[i]), 1.0 / out.multiplicity[i]));
    }
    // Grid verification of {|F| < r} inside the cover.
    constexpr int grid = 1 << 16;
    std::vector<double> values(grid + 1);
    for (int i = 0; i <= grid; ++i) values[i] = std::abs(horner(p, static_cast<double>(i) / grid));
    std::vector<double> radii(r_list.begin(), r_list.end());
    std::sort(radii.begin(), radii.end());
    bool all_so_far = true;
    for (double r : radii) {
        if (!(r > 0.0)) throw ValidationError("level radii must be positive");
        bool ok = true;
        for (int i = 0; i <= grid && ok; ++i)
            if (values[i] < r && !out.covers(static_cast<double>(i) / grid, r)) ok = false;
        out.radii.push_back(r);
        out.verified.push_back(ok);
        all_so_far = all_so_far && ok;
        if (all_so_far) out.r_max = r;
    }
    return out;
}

// ---------------------------------------------------------------------------

SplitFourier split_fourier(const SmoothMapF& F, const Cifs& cifs, double xi, double delta, double delta_prime,
                           double tol) {
    if (F.dim() != 1 || !cifs.is_affine_line()) throw ValidationError("split_fourier needs a 1-D affine system and map");
    if (!(delta_prime > 0.0)) throw ValidationError("delta' must be positive");
    SplitFourier out;
    out.xi = xi;
    const auto W = stopping_words(cifs, xi, delta);
    // Centres: zeros of F' and F''. An identically zero derivative makes every cylinder bad.
    bool everything_bad = false;
    double C = 0.0;
    for (const Expr* d : {&F.d1(), &F.d2()}) {
        const Poly coeffs = d->polynomial_coefficients(0);
        if (identically_zero(coeffs)) {
            everything_bad = true;
            continue;
        }
        const auto cover = zero_cover(*d, {});
        out.centres.insert(out.centres.end(), cover.zeros.begin(), cover.zeros.end());
        C = std::max(C, cover.C);
    }
    out.radius = C * std::pow(std::abs(xi), -delta_prime);
    const AffineExpander ex(F, cifs, xi);
    const auto& hull = ex.hull();
    std::uint64_t visits = 0;
    double covered = 0.0;
    Complex good_comp{0.0, 0.0};
    for (const auto& w : W.words) {
        const auto m = compose(cifs, w.word).as_affine();
        const Interval img = Interval::hull(m.translate + m.ratio * hull.lo, m.translate + m.ratio * hull.hi);
        bool bad = everything_bad;
        for (double c : out.centres)
            if (img.hi > c - out.radius && img.lo < c + out.radius) bad = true;
        const auto part = ex.run(m.ratio, m.translate, w.weight, tol, kDefaultWordBudget, visits);
        if (!part.complete) throw BudgetExhausted("split_fourier exceeded the word budget", tol);
        covered += part.covered;
        if (bad) {
            out.bad_sum += part.sum;
            out.bad_error += part.error;
            out.bad_mass += w.weight;
            ++out.bad_words;
        } else {
            out.good_sum += part.sum;
            out.good_error += part.error;
            ++out.good_words;
        }
    }
    const double uncovered = std::max(0.0, 1.0 - covered);
    out.good_error += uncovered;
    out.full = pushforward_fourier(F, cifs, xi, tol);
    out.reconstruction_gap = std::abs(out.good_sum + out.bad_sum - out.full.value);
    out.consistent = out.reconstruction_gap <= out.good_error + out.bad_error + out.full.error + 1e-12;
    return out;
}

// ---------------------------------------------------------------------------

PrefixDecomposition prefix_decomposition(const SmoothMapF& F, const Cifs& cifs, int depth_cap, std::uint64_t budget) {
    check_dims(F, cifs);
    if (depth_cap < 0) throw ValidationError("depth cap must be nonnegative");
    PrefixDecomposition out;
    out.depth_cap = depth_cap;
    const int d = cifs.dim();
    Box root(d, Interval(0.0, 1.0));
    if (cifs.is_affine_line() && cifs.tail_mass() == 0.0) root = {attractor_hull(cifs)};
    auto certified = [&](const ContractionMap& m) {
        const Box box = m.image(root);
        const Interval curv = F.d2().eval(std::span<const Interval>(box));
        return std::isfinite(curv.lo) && std::isfinite(curv.hi) && (curv.lo > 0.0 || curv.hi < 0.0);
    };
    struct Frame {
        Word word;
        ContractionMap map;
        double p;
    };
    std::vector<Frame> stack{{Word{}, ContractionMap::identity(d), 1.0}};
    std::uint64_t visits = 0;
    while (!stack.empty()) {
        if (++visits > budget) throw BudgetExhausted("prefix decomposition exceeded the budget", out.covered_mass);
        Frame f = std::move(stack.back());
        stack.pop_back();
        if (certified(f.map)) {
            out.covered_mass += f.p;
            out.words.push_back(std::move(f.word));
            continue;
        }
        if (static_cast<int>(f.word.size()) >= depth_cap) {
            out.uncovered_mass += f.p;
            continue;
        }
        for (std::size_t a = cifs.size(); a-- > 0;)
            stack.push_back({f.word.then(Word{{static_cast<int>(a)}}), f.map.after(cifs.symbol(a).map),
                             f.p * cifs.symbol(a).weight});
    }
    out.uncovered_mass += cifs.tail_mass() > 0.0 ? std::max(0.0, 1.0 - out.covered_mass - out.uncovered_mass) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ValidationError("KS distance needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

ConjugateResult conjugate_ifs(const Cifs& psi, const SmoothMapF& F, const Expr& inverse, std::size_t verify_samples,
                              std::uint64_t seed) {
    if (!psi.is_affine_line()) throw ValidationError("conjugation needs an affine line system");
    if (F.dim() != 1 || inverse.max_variable() > 0) throw ValidationError("conjugating map must be one-dimensional");
    for (int i = 0; i < 100; ++i) {
        const double x = i / 99.0;
        const double back = F(inverse.eval(x));
        if (!(std::abs(back - x) <= 1e-9))
            throw ValidationError("inverse check failed: F(F^{-1}(" + std::to_string(x) + ")) = " + std::to_string(back));
    }
    constexpr int grid = 4096;
    double prev = F(0.0);
    int direction = 0;
    double lip = 0.0;
    for (int i = 1; i <= grid; ++i) {
        const double x = static_cast<double>(i) / grid;
        const double v = F(x);
        const int s = v > prev ? 1 : (v < prev ? -1 : 0);
        if (s == 0 || (direction != 0 && s != direction))
            throw ValidationError("F is not strictly monotone on [0,1]");
        direction = s;
        prev = v;
        lip = std::max(lip, std::abs(F.d1().eval(x)));
    }
    lip += F.d2().eval(Interval(0.0, 1.0)).mag() / (2.0 * grid);
    std::vector<Symbol> symbols;
    std::vector<double> rates;
    bool all_affine = true;
    for (const auto& s : psi.symbols()) {
        const auto& a = s.map.as_affine();
        const Expr inner = Expr::constant(a.ratio) * inverse + Expr::constant(a.translate);
        const Expr conj = F.expr().substitute(std::span<const Expr>(&inner, 1));
        std::optional<ContractionMap> map;
        try {
            const auto c = conj.polynomial_coefficients(0);
            if (c.size() <= 2 && c.size() == 2) map = ContractionMap::affine(c[1], c[0]);
        } catch (const ValidationError&) {
        }
        if (!map) {
            all_affine = false;
            map = ContractionMap::smooth({conj}, 0.0, false);
        }
        symbols.push_back({s.id, *map, s.weight, s.exact_weight});
        rates.push_back(std::abs(a.ratio));
    }
    Cifs::Options opts;
    opts.tail_mass = psi.tail_mass();
    if (!all_affine) {
        opts.require_contraction = false;
        opts.convergence_rates = rates;
        opts.sampling_prefactor = lip;
    }
    ConjugateResult out{Cifs(std::move(symbols), opts), -1.0, 0};
    if (verify_samples > 0) {
        SampleOptions so;
        so.tol = 1e-12;
        auto nu = sample_points(psi, verify_samples, so, seed).coords;
        for (double& x : nu) x = F(x);
        auto mu = sample_points(out.system, verify_samples, so, mix64(seed + 1)).last_coordinate();
        out.ks_distance = ks_distance(std::move(nu), std::move(mu));
        out.samples = verify_samples;
    }
    return out;
}

}  // namespace ffl
