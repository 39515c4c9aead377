#include "ffl/decay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ffl/error.hpp"
#include "ffl/parallel.hpp"
#include "ffl/rng.hpp"

namespace ffl {

Evaluator measure_evaluator(const Cifs& cifs, double tol, std::uint64_t budget) {
    // Equal ratios admit the infinite product, truncated where its tail bound meets tol.
    if (cifs.is_affine_line() && cifs.tail_mass() == 0.0) {
        const auto r = cifs.ratios();
        const double r0 = std::abs(r[0]);
        const bool homogeneous = r0 > 0.0 && std::all_of(r.begin(), r.end(), [&](double v) {
            return std::abs(v - r[0]) <= 1e-15 * r0;
        });
        if (homogeneous) {
            double max_t = 0.0;
            for (double t : cifs.translates()) max_t = std::max(max_t, std::abs(t));
            return [cifs, tol, r0, max_t](double xi) {
                const double need = kTwoPi * std::abs(xi) * max_t / ((1.0 - r0) * tol);
                const int M = need > 1.0 ? static_cast<int>(std::ceil(std::log(need) / -std::log(r0))) + 1 : 1;
                return fourier_product_homogeneous(cifs, xi, M);
            };
        }
    }
    return [cifs, tol, budget](double xi) { return fourier_exact(cifs, xi, tol, budget); };
}

Evaluator pushforward_evaluator(const SmoothMapF& F, const Cifs& cifs, double tol, std::uint64_t budget) {
    return [F, cifs, tol, budget](double xi) { return pushforward_fourier(F, cifs, xi, tol, budget); };
}

namespace {

// Kronecker sequence frac(i / golden ratio): low discrepancy, prefix-stable, and
// free of the dyadic phase alignment a van der Corput sequence has at T = 2^j.
double kronecker(std::uint64_t i) {
    constexpr double inv_phi = 0.61803398874989484820;
    const double v = static_cast<double>(i) * inv_phi;
    return v - std::floor(v);
}

struct Line {
    double slope = 0.0, intercept = 0.0, slope_se = 0.0, r2 = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ValidationError("fit needs at least two distinct abscissae");
    Line l;
    l.slope = sxy / sxx;
    l.intercept = my - l.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - l.intercept - l.slope * x[i];
        ssr += r * r;
    }
    l.slope_se = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
    l.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    return l;
}

}  // namespace

std::vector<BandMax> band_maxima(const Evaluator& eval, double base, int j_lo, int j_hi,
                                 std::size_t samples_per_band, std::uint64_t seed) {
    if (samples_per_band < 64) throw ValidationError("need at least 64 samples per band");
    if (!(base > 1.0)) throw ValidationError("band base must exceed 1");
    if (j_hi < j_lo) throw ValidationError("empty band range");
    const std::size_t S = samples_per_band;
    std::vector<BandMax> bands;
    std::vector<double> xis;
    for (int j = j_lo; j <= j_hi; ++j) {
        BandMax b;
        b.j = j;
        b.lo = std::pow(base, j);
        b.hi = 2.0 * b.lo;
        bands.push_back(b);
        CounterRng rng(seed, static_cast<std::uint64_t>(j - j_lo));
        const double shift = rng.uniform();
        for (std::size_t i = 0; i < S; ++i) xis.push_back(b.lo * (1.0 + static_cast<double>(i) / S));
        for (std::size_t i = 0; i < S; ++i) {
            double u = kronecker(i + 1) + shift;
            u -= std::floor(u);
            xis.push_back(b.lo * (1.0 + u));
        }
    }
    std::vector<FourierValue> vals(xis.size());
    std::vector<char> failed(xis.size(), 0);
    parallel_for(xis.size(), [&](std::size_t i) {
        try {
            vals[i] = eval(xis[i]);
        } catch (const BudgetExhausted&) {
            failed[i] = 1;
        }
    });
    for (std::size_t b = 0; b < bands.size(); ++b) {
        auto& band = bands[b];
        for (std::size_t i = b * 2 * S; i < (b + 1) * 2 * S; ++i) {
            if (failed[i]) {
                ++band.excluded;
                continue;
            }
            ++band.samples;
            const double a = std::abs(vals[i].value);
            band.max_error = std::max(band.max_error, vals[i].error);
            if (a > band.max_abs) {
                band.max_abs = a;
                band.argmax = xis[i];
            }
        }
    }
    return bands;
}

DecayFit fit_eta(const std::vector<BandMax>& bands) {
    DecayFit fit;
    std::vector<double> x, y;
    for (const auto& b : bands) {
        if (b.max_abs > 0.0 && b.samples > 0) {
            x.push_back(std::log(b.lo));
            y.push_back(std::log(b.max_abs));
        } else {
            fit.excluded_bands.push_back(b.j);
        }
    }
    if (x.size() < 4) throw ValidationError("decay fit needs at least 4 bands with positive maxima");
    const auto l = least_squares(x, y);
    fit.eta = -l.slope;
    fit.C = std::exp(l.intercept);
    fit.eta_se = l.slope_se;
    fit.r2 = l.r2;
    fit.used = x.size();
    return fit;
}

SparseCover sparse_cover(const Evaluator& eval, double T, double epsilon, double grid_step) {
    if (!(T >= 4.0)) throw ValidationError("sparse cover needs T >= 4");
    if (!(grid_step > 0.0 && grid_step <= 0.25)) throw ValidationError("grid step must lie in (0, 1/4]");
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be nonnegative");
    SparseCover out;
    out.T = T;
    out.epsilon = epsilon;
    out.grid_step = grid_step;
    const auto n = static_cast<std::size_t>(std::floor(T / grid_step)) + 1;
    const double threshold = std::pow(T, -epsilon);
    std::vector<char> hit(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const double xi = std::min(T, static_cast<double>(i) * grid_step);
        try {
            const auto v = eval(xi);
            hit[i] = std::abs(v.value) + v.error >= threshold;
        } catch (const BudgetExhausted&) {
            hit[i] = 1;  // unresolved frequencies are marked
        }
    });
    out.evaluations = n;
    std::vector<long> marked;
    for (std::size_t i = 0; i < n; ++i) {
        if (!hit[i]) continue;
        const double xi = std::min(T, static_cast<double>(i) * grid_step);
        marked.push_back(static_cast<long>(std::floor(xi)));
        marked.push_back(static_cast<long>(std::floor(-xi)));
    }
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    out.count = marked.size();
    out.marked = std::move(marked);
    return out;
}

GrowthFit growth_exponent(const std::vector<SparseCover>& covers) {
    std::vector<double> x, y;
    for (const auto& c : covers) {
        if (c.count == 0) continue;
        x.push_back(std::log(c.T));
        y.push_back(std::log(static_cast<double>(c.count)));
    }
    if (x.size() < 2) throw ValidationError("growth fit needs two nonempty covers");
    const auto l = least_squares(x, y);
    return {l.slope, l.slope_se};
}

std::vector<double> geometric_family(double base, int n_lo, int n_hi) {
    if (!(base > 1.0) || n_hi < n_lo) throw ValidationError("invalid frequency family");
    std::vector<double> out;
    for (int n = n_lo; n <= n_hi; ++n) out.push_back(std::pow(base, n));
    return out;
}

std::vector<FourierValue> rajchman_probe(const Evaluator& eval, const std::vector<double>& family) {
    std::vector<FourierValue> out(family.size());
    parallel_for(family.size(), [&](std::size_t i) { out[i] = eval(family[i]); });
    return out;
}

std::string loglog_svg(const std::string& title, const std::vector<Series>& series) {
    constexpr double W = 800, H = 600, L = 80, R = 20, Tm = 40, B = 60;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0 && s.y[i] > 0.0)) continue;
            x0 = std::min(x0, std::log10(s.x[i]));
            x1 = std::max(x1, std::log10(s.x[i]));
            y0 = std::min(y0, std::log10(s.y[i]));
            y1 = std::max(y1, std::log10(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double v) { return L + (std::log10(v) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (std::log10(v) - y0) / (y1 - y0) * (H - Tm - B); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    };
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
    os << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    os << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << esc(title)
       << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = static_cast<int>(std::ceil(x0)); k <= static_cast<int>(std::floor(x1)); ++k) {
        const double X = px(std::pow(10.0, k));
        os << "<line x1=\"" << num(X) << "\" y1=\"" << H - B << "\" x2=\"" << num(X) << "\" y2=\"" << H - B + 6
           << "\" stroke=\"black\"/><text x=\"" << num(X) << "\" y=\"" << H - B + 22
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1e" << k << "</text>\n";
    }
    for (int k = static_cast<int>(std::ceil(y0)); k <= static_cast<int>(std::floor(y1)); ++k) {
        const double Y = py(std::pow(10.0, k));
        os << "<line x1=\"" << L - 6 << "\" y1=\"" << num(Y) << "\" x2=\"" << L << "\" y2=\"" << num(Y)
           << "\" stroke=\"black\"/><text x=\"" << L - 10 << "\" y=\"" << num(Y + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" << k << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = colours[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!(series[s].x[i] > 0.0 && series[s].y[i] > 0.0)) continue;
            os << (first ? "" : " ") << num(px(series[s].x[i])) << "," << num(py(series[s].y[i]));
            first = false;
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - R - 10 << "\" y=\"" << Tm + 20 + 18 * s << "\" text-anchor=\"end\" fill=\"" << colour
           << "\" font-family=\"sans-serif\" font-size=\"13\">" << esc(series[s].label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace ffl
