#include "ffl/measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "ffl/error.hpp"
#include "ffl/parallel.hpp"

namespace ffl {

std::string to_string(ErrorKind kind) { return kind == ErrorKind::Rigorous ? "rigorous" : "statistical"; }

std::vector<double> SampleSet::last_coordinate() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = coords[i * dim + dim - 1];
    return out;
}

namespace {

/// Draws coding-map images of i.i.d. words.
class Drawer {
public:
    Drawer(const Cifs& cifs, SampleOptions options)
        : cifs_(cifs), options_(options), pick_(cifs.weights()), affine_(cifs.is_affine_line()) {
        if (options_.depth && *options_.depth < 0) throw ValidationError("sampling depth must be nonnegative");
        if (!options_.depth && !(options_.tol > 0.0)) throw ValidationError("sampling tolerance must be positive");
        for (std::size_t i = 0; i < cifs.size(); ++i) rate_.push_back(cifs.convergence_rate(i));
        if (affine_) {
            ratio_ = cifs.ratios();
            translate_ = cifs.translates();
            const auto hull = attractor_hull(cifs);
            factor_ = std::max({std::abs(hull.lo), std::abs(hull.hi), 1e-300});
        } else {
            factor_ = cifs.sampling_prefactor();
        }
        if (!options_.depth && cifs_.contraction_bound() >= 1.0) {
            const double worst = *std::max_element(rate_.begin(), rate_.end());
            if (!(worst < 1.0)) throw ValidationError("sampling needs convergence rates below 1");
        }
    }

    int dim() const { return cifs_.dim(); }

    /// Writes one point; returns the distance bound achieved.
    double draw(CounterRng& rng, std::span<double> out, int& depth, std::vector<int>& scratch) const {
        const int cap = options_.depth ? *options_.depth : options_.depth_cap;
        double bound = factor_;
        depth = 0;
        if (affine_) {
            double x = 0.0;
            double r = 1.0;
            while (depth < cap && (options_.depth || bound > options_.tol)) {
                const std::size_t a = pick_(rng);
                x += r * translate_[a];
                r *= ratio_[a];
                bound *= rate_[a];
                ++depth;
            }
            out[0] = x;
            return bound;
        }
        scratch.clear();
        while (depth < cap && (options_.depth || bound > options_.tol)) {
            const std::size_t a = pick_(rng);
            scratch.push_back(static_cast<int>(a));
            bound *= rate_[a];
            ++depth;
        }
        std::fill(out.begin(), out.end(), 0.0);
        for (auto it = scratch.rbegin(); it != scratch.rend(); ++it) cifs_.symbol(*it).map.apply(out, out);
        return bound;
    }

private:
    Cifs cifs_;
    SampleOptions options_;
    DiscreteSampler pick_;
    bool affine_;
    std::vector<double> rate_, ratio_, translate_;
    double factor_ = 1.0;
};

}  // namespace

SampleSet sample_points(const Cifs& cifs, std::size_t n, const SampleOptions& options, std::uint64_t seed) {
    if (n == 0) throw ValidationError("sample count must be at least 1");
    const Drawer drawer(cifs, options);
    SampleSet out;
    out.dim = drawer.dim();
    out.coords.assign(n * out.dim, 0.0);
    out.depth.assign(n, 0);
    constexpr std::size_t chunk = 4096;
    const std::size_t chunks = (n + chunk - 1) / chunk;
    std::vector<double> worst(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t c) {
        std::vector<int> scratch;
        for (std::size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
            CounterRng rng(seed, i);
            const double b = drawer.draw(rng, std::span<double>(out.coords).subspan(i * out.dim, out.dim),
                                         out.depth[i], scratch);
            worst[c] = std::max(worst[c], b);
        }
    });
    out.achieved_tol = *std::max_element(worst.begin(), worst.end());
    return out;
}

PointSampler measure_sampler(const Cifs& cifs, double tol) {
    SampleOptions opts;
    opts.tol = tol;
    auto drawer = std::make_shared<const Drawer>(cifs, opts);
    return [drawer](CounterRng& rng) {
        thread_local std::vector<int> scratch;
        thread_local std::vector<double> point;
        point.resize(drawer->dim());
        int depth = 0;
        drawer->draw(rng, point, depth, scratch);
        return point.back();
    };
}

// ---------------------------------------------------------------------------

MeasureMoments affine_moments(const Cifs& cifs) {
    const auto r = cifs.ratios();
    const auto t = cifs.translates();
    const auto p = cifs.weights();
    double pr = 0.0, pt = 0.0, pr2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        pr += p[i] * r[i];
        pt += p[i] * t[i];
        pr2 += p[i] * r[i] * r[i];
    }
    MeasureMoments m;
    m.mean = pt / (1.0 - pr);
    double num = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) num += p[i] * (2.0 * r[i] * t[i] * m.mean + t[i] * t[i]);
    const double second = num / (1.0 - pr2);
    m.variance = std::max(0.0, second - m.mean * m.mean);
    const auto hull = attractor_hull(cifs);
    m.spread = std::max(m.mean - hull.lo, hull.hi - m.mean);
    return m;
}

namespace {

struct ExactAttempt {
    Complex sum{0.0, 0.0};
    double error = 0.0;
    double covered = 0.0;
    bool complete = true;
};

ExactAttempt expand_cylinders(const Cifs& cifs, double xi, double tol, std::uint64_t budget) {
    const auto r = cifs.ratios();
    const auto t = cifs.translates();
    const auto p = cifs.weights();
    const bool truncated = cifs.tail_mass() > 0.0;
    MeasureMoments mom;
    if (truncated) {
        // Omitted maps are unknown self-maps of [0,1]: centre anchor, first-order bound only.
        mom.mean = 0.5;
        mom.spread = 0.5;
        mom.variance = std::numeric_limits<double>::infinity();
    } else {
        mom = affine_moments(cifs);
    }
    const double first = kTwoPi * std::abs(xi) * mom.spread;
    const double second = 0.5 * kTwoPi * kTwoPi * xi * xi * mom.variance;

    struct Frame {
        double r, t, p;
    };
    std::vector<Frame> stack{{1.0, 0.0, 1.0}};
    ExactAttempt out;
    Complex comp{0.0, 0.0};
    std::uint64_t visits = 0;
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        for (std::size_t a = 0; a < r.size(); ++a) {
            if (++visits > budget) {
                out.complete = false;
                return out;
            }
            const double rr = f.r * r[a];
            const double tt = f.r * t[a] + f.t;
            const double pp = f.p * p[a];
            const double err = std::min(first * std::abs(rr), second * rr * rr);
            if (err <= tol) {
                // Kahan summation of the leaf characters.
                const Complex term = pp * character(xi * (rr * mom.mean + tt)) - comp;
                const Complex next = out.sum + term;
                comp = (next - out.sum) - term;
                out.sum = next;
                out.error += pp * err;
                out.covered += pp;
            } else {
                stack.push_back({rr, tt, pp});
            }
        }
    }
    return out;
}

}  // namespace

FourierValue fourier_exact(const Cifs& cifs, double xi, double tol, std::uint64_t budget) {
    if (!cifs.is_affine_line()) throw ValidationError("fourier_exact needs a 1-D affine system");
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    FourierValue v;
    v.xi = xi;
    if (xi == 0.0) return v;
    double level = tol;
    for (int attempt = 0; attempt < 40; ++attempt, level *= 4.0) {
        auto res = expand_cylinders(cifs, xi, level, budget);
        if (!res.complete) continue;
        v.value = res.sum;
        v.error = res.error + std::max(0.0, 1.0 - res.covered) + 1e-15 * (1.0 + std::abs(xi));
        v.budget_exhausted = attempt > 0;
        // |value| <= 1, so a bound of 2 or more says nothing.
        if (v.error >= 2.0) throw BudgetExhausted("fourier_exact: the word budget only allows a vacuous error bound", v.error);
        return v;
    }
    throw BudgetExhausted("fourier_exact: no tolerance fits the word budget", 2.0);
}

std::vector<FourierValue> fourier_montecarlo(const PointSampler& sampler, std::span<const double> xis,
                                             std::size_t m, std::uint64_t seed, double z,
                                             std::function<double(double)> bias) {
    if (m < 100) throw ValidationError("Monte Carlo sample count must be at least 100");
    std::vector<FourierValue> out(xis.size());
    parallel_for(xis.size(), [&](std::size_t i) {
        const double xi = xis[i];
        CounterRng rng(seed, mix64(std::bit_cast<std::uint64_t>(xi)));
        double sr = 0.0, si = 0.0, qr = 0.0, qi = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const Complex c = character(xi * sampler(rng));
            sr += c.real();
            si += c.imag();
            qr += c.real() * c.real();
            qi += c.imag() * c.imag();
        }
        const double md = static_cast<double>(m);
        const double mr = sr / md, mi = si / md;
        const double vr = std::max(0.0, (qr - md * mr * mr) / (md - 1.0));
        const double vi = std::max(0.0, (qi - md * mi * mi) / (md - 1.0));
        FourierValue v;
        v.xi = xi;
        v.value = {mr, mi};
        v.kind = ErrorKind::Statistical;
        v.standard_error = std::sqrt((vr + vi) / md);
        v.confidence_z = z;
        v.error = z * v.standard_error + (bias ? bias(xi) : 0.0);
        out[i] = v;
    });
    return out;
}

FourierValue fourier_product_homogeneous(const Cifs& cifs, double xi, int factors) {
    if (!cifs.is_affine_line()) throw ValidationError("product formula needs a 1-D affine system");
    if (factors < 1) throw ValidationError("factor count must be at least 1");
    if (cifs.tail_mass() > 0.0) throw ValidationError("product formula needs a finite alphabet");
    const auto r = cifs.ratios();
    const auto t = cifs.translates();
    const auto p = cifs.weights();
    for (double ri : r)
        if (std::abs(ri - r[0]) > 1e-15 * std::abs(r[0]))
            throw ValidationError("product formula needs equal ratios");
    FourierValue v;
    v.xi = xi;
    if (xi == 0.0) return v;
    Complex prod{1.0, 0.0};
    double scale = 1.0;
    for (int n = 0; n < factors; ++n) {
        Complex f{0.0, 0.0};
        for (std::size_t a = 0; a < r.size(); ++a) f += p[a] * character(xi * t[a] * scale);
        prod *= f;
        scale *= r[0];
    }
    double max_t = 0.0;
    for (double ti : t) max_t = std::max(max_t, std::abs(ti));
    v.value = prod;
    v.error = kTwoPi * std::abs(xi) * std::abs(scale) * max_t / (1.0 - std::abs(r[0])) +
              1e-15 * factors * (1.0 + std::abs(xi));
    return v;
}

// ---------------------------------------------------------------------------

FrostmanProfile frostman_profile(std::span<const double> samples, std::span<const double> r_grid,
                                 std::span<const double> x_grid) {
    if (samples.size() < 10000) throw ValidationError("Frostman profile needs at least 10^4 samples");
    if (x_grid.empty()) throw ValidationError("Frostman profile needs a non-empty centre grid");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    FrostmanProfile out;
    for (double r : r_grid) {
        int exponent = 0;
        if (!(r > 0.0) || std::frexp(r, &exponent) != 0.5) throw ValidationError("radii must be dyadic");
        FrostmanRow row;
        row.r = r;
        row.reliable = n >= 10.0 / r;
        for (double x : x_grid) {
            const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - r);
            const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + r);
            const double mass = static_cast<double>(hi - lo) / n;
            if (mass > row.max_mass) {
                row.max_mass = mass;
                row.argmax = x;
            }
        }
        out.rows.push_back(row);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
    for (const auto& row : out.rows) {
        if (!row.reliable || row.max_mass <= 0.0) continue;
        const double lx = std::log(row.r), ly = std::log(row.max_mass);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        k += 1;
    }
    if (k >= 2) out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    return out;
}

// ---------------------------------------------------------------------------

CylinderDecomposition cylinder_decomposition(const Cifs& cifs, double max_diameter, std::uint64_t budget) {
    if (!(max_diameter > 0.0)) throw ValidationError("diameter bound must be positive");
    const bool affine = cifs.is_affine_line();
    double extent = 1.0;
    if (affine && cifs.tail_mass() == 0.0) {
        const auto hull = attractor_hull(cifs);
        extent = hull.hi - hull.lo;
    }
    std::vector<double> lip;
    for (const auto& s : cifs.symbols())
        lip.push_back(s.map.kind() == ContractionMap::Kind::Affine ? std::abs(s.map.as_affine().ratio)
                                                                    : s.map.lipschitz());
    struct Frame {
        Word word;
        double diam, p;
    };
    CylinderDecomposition out;
    std::vector<Frame> stack{{Word{}, extent, 1.0}};
    std::uint64_t visits = 0;
    double covered = 0.0;
    std::vector<double> zero(cifs.dim(), 0.0);
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        for (std::size_t a = cifs.size(); a-- > 0;) {
            if (++visits > budget)
                throw BudgetExhausted("cylinder decomposition exceeded the word budget", f.diam);
            Frame child{f.word.then(Word{{static_cast<int>(a)}}), f.diam * lip[a], f.p * cifs.symbol(a).weight};
            if (child.diam <= max_diameter) {
                Cylinder c;
                c.weight = child.p;
                c.diameter = child.diam;
                c.anchor = zero;
                for (auto it = child.word.letters.rbegin(); it != child.word.letters.rend(); ++it)
                    cifs.symbol(*it).map.apply(c.anchor, c.anchor);
                c.word = std::move(child.word);
                covered += c.weight;
                out.cylinders.push_back(std::move(c));
            } else {
                stack.push_back(std::move(child));
            }
        }
    }
    out.tail_mass = std::max(0.0, 1.0 - covered);
    return out;
}

}  // namespace ffl
