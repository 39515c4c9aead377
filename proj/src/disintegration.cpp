#include "ffl/disintegration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ffl/error.hpp"
#include "ffl/parallel.hpp"

namespace ffl {

Word EquivClass::member(std::size_t mask) const {
    Word w = representative;
    for (std::size_t s = 0; s < special_slots.size(); ++s)
        if (mask >> s & 1u) w.letters[special_slots[s]] = second_symbol;
    return w;
}

std::vector<double> ClassTable::weights() const {
    std::vector<double> q;
    q.reserve(classes.size());
    for (const auto& c : classes) q.push_back(c.q);
    return q;
}

ClassTable build_classes(const FibreProduct& fp, int k, std::uint64_t budget) {
    if (k < 1) throw ValidationError("block length k must be at least 1");
    const auto& alphabet = fp.alphabet();
    const std::size_t A = alphabet.size();
    if (std::pow(static_cast<double>(A), k) > static_cast<double>(budget))
        throw BudgetExhausted("class enumeration needs " + std::to_string(A) + "^" + std::to_string(k) +
                                  " words, above the budget; use a smaller k or truncate the alphabet",
                              std::floor(std::log(static_cast<double>(budget)) / std::log(static_cast<double>(A))));
    const auto& sp = fp.separated_pair();
    int s1 = -1, s2 = -1;
    std::vector<double> ratio(A), translate(A), weight(A);
    for (std::size_t i = 0; i < A; ++i) {
        if (alphabet[i].base == sp.base && alphabet[i].fibre == sp.first) s1 = static_cast<int>(i);
        if (alphabet[i].base == sp.base && alphabet[i].fibre == sp.second) s2 = static_cast<int>(i);
        const auto& m = fp.fibre_map(alphabet[i]);
        ratio[i] = m.ratio;
        translate[i] = m.translate;
        weight[i] = fp.weight(alphabet[i]);
    }

    ClassTable table;
    table.k = k;
    table.p_star = sp.weight;
    table.gap = sp.gap;
    table.lyapunov = fp.lyapunov();
    table.base_maps = fp.base_maps();

    // Classes correspond to words over the alphabet without the second separated symbol.
    std::vector<int> reduced;
    for (std::size_t i = 0; i < A; ++i)
        if (static_cast<int>(i) != s2) reduced.push_back(static_cast<int>(i));
    std::vector<std::size_t> digit(k, 0);
    while (true) {
        EquivClass c;
        c.second_symbol = s2;
        c.representative.letters.resize(k);
        for (int i = 0; i < k; ++i) {
            const int a = reduced[digit[i]];
            c.representative.letters[i] = a;
            if (a == s1) c.special_slots.push_back(i);
            c.ratio *= ratio[a];
            c.member_weight *= weight[a];
            c.base_word.push_back(alphabet[a].base);
        }
        c.size = std::size_t{1} << c.special_slots.size();
        c.q = c.member_weight * static_cast<double>(c.size);
        c.translates.resize(c.size);
        for (std::size_t mask = 0; mask < c.size; ++mask) {
            const Word w = c.member(mask);
            double t = 0.0, r = 1.0;
            for (int a : w.letters) {
                t += r * translate[a];
                r *= ratio[a];
            }
            c.translates[mask] = t;
        }
        // Members' images of [0,1] are pairwise disjoint.
        std::vector<double> starts = c.translates;
        for (double& s : starts) s = std::min(s, s + c.ratio);
        std::sort(starts.begin(), starts.end());
        for (std::size_t i = 1; i < starts.size(); ++i)
            if (!(starts[i] > starts[i - 1] + std::abs(c.ratio)))
                throw ValidationError("class members have overlapping fibre images");
        table.max_ratio = std::max(table.max_ratio, std::abs(c.ratio));
        for (double t : c.translates) table.max_translate = std::max(table.max_translate, std::abs(t));
        table.classes.push_back(std::move(c));

        int pos = k - 1;
        while (pos >= 0 && ++digit[pos] == reduced.size()) digit[pos--] = 0;
        if (pos < 0) break;
    }
    table.class_sampler = DiscreteSampler(table.weights());
    return table;
}

Cifs fibre_marginal_system(const FibreProduct& fp) {
    std::vector<Symbol> symbols;
    for (const auto& s : fp.alphabet())
        symbols.push_back({std::to_string(s.base) + "." + std::to_string(s.fibre),
                           ContractionMap::affine(fp.fibre_map(s)), fp.weight(s), std::nullopt});
    return Cifs(std::move(symbols));
}


// ---------------------------------------------------------------------------

int omega_class(const ClassTable& table, std::uint64_t seed, std::size_t i) {
    CounterRng rng(seed, i);
    return static_cast<int>(table.class_sampler(rng));
}

OmegaSample sample_omega(const ClassTable& table, std::size_t length, std::uint64_t seed) {
    OmegaSample omega;
    omega.seed = seed;
    extend_omega(table, omega, length);
    return omega;
}

void extend_omega(const ClassTable& table, OmegaSample& omega, std::size_t length) {
    while (omega.classes.size() < length) omega.classes.push_back(omega_class(table, omega.seed, omega.classes.size()));
}

std::vector<double> cumulative_ratios(const ClassTable& table, const OmegaSample& omega) {
    std::vector<double> out;
    out.reserve(omega.size());
    double r = 1.0;
    for (int c : omega.classes) out.push_back(r *= table.classes[c].ratio);
    return out;
}

std::vector<double> omega_base_point(const ClassTable& table, const OmegaSample& omega) {
    const int d = table.base_maps.front().dim();
    std::vector<double> x(d, 0.0);
    for (auto it = omega.classes.rbegin(); it != omega.classes.rend(); ++it) {
        const auto& word = table.classes[*it].base_word;
        for (auto jt = word.rbegin(); jt != word.rend(); ++jt) table.base_maps[*jt].apply(x, x);
    }
    return x;
}

namespace {

double tail_factor(const ClassTable& table) {
    return table.max_translate / (1.0 - table.max_ratio);
}

}  // namespace

FourierValue mu_omega_fourier(const ClassTable& table, const OmegaSample& omega, double xi, std::size_t factors) {
    if (omega.size() < factors) throw ValidationError("omega prefix is shorter than the requested factor count");
    FourierValue v;
    v.xi = xi;
    if (xi == 0.0) return v;
    Complex prod{1.0, 0.0};
    double scale = 1.0;
    for (std::size_t m = 0; m < factors; ++m) {
        const auto& c = table.classes[omega.classes[m]];
        Complex f{0.0, 0.0};
        for (double t : c.translates) f += character(xi * t * scale);
        prod *= f / static_cast<double>(c.size);
        scale *= c.ratio;
    }
    v.value = prod;
    v.error = kTwoPi * std::abs(xi) * std::abs(scale) * tail_factor(table) + 1e-15 * factors;
    return v;
}

FourierValue mu_omega_fourier_tol(const ClassTable& table, const OmegaSample& omega, double xi, double tol,
                                  std::size_t max_factors) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    const double lead = kTwoPi * std::abs(xi) * tail_factor(table);
    std::size_t m = 0;
    double scale = 1.0;
    while (lead * std::abs(scale) > tol && m < max_factors) {
        const int c = m < omega.size() ? omega.classes[m] : omega_class(table, omega.seed, m);
        scale *= table.classes[c].ratio;
        ++m;
    }
    if (m <= omega.size()) return mu_omega_fourier(table, omega, xi, m);
    OmegaSample longer = omega;
    extend_omega(table, longer, m);
    return mu_omega_fourier(table, longer, xi, m);
}

std::vector<double> sample_mu_omega(const ClassTable& table, const OmegaSample& omega, std::size_t n,
                                    std::uint64_t seed, double tol) {
    const double lead = tail_factor(table);
    OmegaSample w = omega;
    std::size_t depth = 0;
    double scale = 1.0;
    while (lead * std::abs(scale) > tol && depth < 100000) {
        extend_omega(table, w, depth + 1);
        scale *= table.classes[w.classes[depth]].ratio;
        ++depth;
    }
    std::vector<double> out(n);
    parallel_for((n + 4095) / 4096, [&](std::size_t chunk) {
        for (std::size_t j = chunk * 4096; j < std::min(n, (chunk + 1) * 4096); ++j) {
            CounterRng rng(seed, j);
            double x = 0.0, r = 1.0;
            for (std::size_t m = 0; m < depth; ++m) {
                const auto& c = table.classes[w.classes[m]];
                x += r * c.translates[c.size == 1 ? 0 : rng.below(c.size)];
                r *= c.ratio;
            }
            out[j] = x;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------

bool ConsistencyReport::pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ConsistencyRow& r) { return r.pass; });
}

ConsistencyReport disintegration_consistency(const FibreProduct& fp, int k, std::span<const double> xis,
                                             std::size_t n_omega, std::uint64_t seed, double tol) {
    if (n_omega < 2) throw ValidationError("consistency needs at least two sampled omegas");
    const ClassTable table = build_classes(fp, k);
    const Cifs marginal = fibre_marginal_system(fp);
    ConsistencyReport report;
    report.k = k;
    report.n_omega = n_omega;
    const std::size_t nx = xis.size();
    std::vector<Complex> values(n_omega * nx);
    std::vector<double> errors(n_omega * nx);
    parallel_for(n_omega, [&](std::size_t i) {
        const OmegaSample omega = sample_omega(table, 0, mix64(seed ^ mix64(i + 1)));
        for (std::size_t x = 0; x < nx; ++x) {
            const auto v = mu_omega_fourier_tol(table, omega, xis[x], tol);
            values[i * nx + x] = v.value;
            errors[i * nx + x] = v.error;
        }
    });
    for (std::size_t x = 0; x < nx; ++x) {
        ConsistencyRow row;
        row.xi = xis[x];
        Complex sum{0.0, 0.0};
        double trunc = 0.0;
        for (std::size_t i = 0; i < n_omega; ++i) {
            sum += values[i * nx + x];
            trunc = std::max(trunc, errors[i * nx + x]);
        }
        const double n = static_cast<double>(n_omega);
        row.mean = sum / n;
        double var = 0.0;
        for (std::size_t i = 0; i < n_omega; ++i) var += std::norm(values[i * nx + x] - row.mean);
        row.standard_error = std::sqrt(var / (n - 1.0) / n);
        const auto ref = fourier_exact(marginal, xis[x], tol);
        row.reference = ref.value;
        row.reference_error = ref.error;
        row.truncation_error = trunc;
        const double diff = std::abs(row.mean - row.reference);
        const double rigorous = row.reference_error + row.truncation_error;
        row.pass = diff <= 4.0 * row.standard_error + rigorous;
        if (row.standard_error > 0.0) row.z_score = std::max(0.0, diff - rigorous) / row.standard_error;
        else row.z_score = diff <= rigorous ? 0.0 : std::numeric_limits<double>::infinity();
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------

double LDParams::size_threshold() const { return std::exp2(p_star * k); }
double LDParams::dense_fraction() const { return 1.0 - std::exp(-alpha * k); }
double LDParams::ratio_floor() const { return std::exp(-std::exp(0.75 * alpha * k)); }
double LDParams::eps_star() const { return gap * std::exp(-2.0 * std::exp(0.75 * alpha * k)) / 5.0; }

LDParams make_ld_params(const ClassTable& table, double alpha, std::size_t n_start) {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (n_start < 1) throw ValidationError("N' must be at least 1");
    LDParams p;
    p.k = table.k;
    p.alpha = alpha;
    p.n_start = n_start;
    p.p_star = table.p_star;
    p.lyapunov = table.lyapunov;
    p.gap = table.gap;
    return p;
}

AlphaCalibration calibrate_alpha(const ClassTable& table, std::uint64_t seed, std::size_t draws) {
    const double threshold = std::exp2(table.p_star * table.k);
    AlphaCalibration cal;
    std::vector<char> small(table.classes.size());
    for (std::size_t i = 0; i < table.classes.size(); ++i) {
        small[i] = static_cast<double>(table.classes[i].size) <= threshold;
        if (small[i]) cal.small_class_mass += table.classes[i].q;
    }
    cal.draws = draws;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws; ++i) hits += small[omega_class(table, seed, i)];
    cal.monte_carlo_mass = draws ? static_cast<double>(hits) / static_cast<double>(draws) : 0.0;
    for (double a : {0.2, 0.1, 0.05}) {
        if (cal.small_class_mass <= std::exp(-2.0 * a * table.k)) {
            cal.alpha = a;
            return cal;
        }
    }
    cal.from_candidates = false;
    cal.alpha = -std::log(cal.small_class_mass) / (2.0 * table.k);
    return cal;
}

MembershipReport check_omega_membership(const ClassTable& table, const OmegaSample& omega, const LDParams& params,
                                        std::size_t n_lo, std::size_t n_hi) {
    if (n_lo < 1 || n_hi < n_lo) throw ValidationError("membership range must satisfy 1 <= N_lo <= N_hi");
    if (omega.size() < n_hi) throw ValidationError("omega prefix is shorter than the largest N");
    const double size_threshold = params.size_threshold();
    const double floor = params.ratio_floor();
    const double dense = params.dense_fraction();
    double small_ratio_mean = 0.0;  // sum over classes with |r| < floor of q log|r|
    for (const auto& c : table.classes)
        if (std::abs(c.ratio) < floor) small_ratio_mean += c.q * std::log(std::abs(c.ratio));

    MembershipReport report;
    std::size_t large = 0, wide = 0;
    double log_prod = 0.0, log_small = 0.0;
    for (std::size_t i = 1; i <= n_hi; ++i) {
        const auto& c = table.classes[omega.classes[i - 1]];
        const double lr = std::log(std::abs(c.ratio));
        large += static_cast<double>(c.size) > size_threshold;
        wide += std::abs(c.ratio) >= floor;
        log_prod += lr;
        if (std::abs(c.ratio) < floor) log_small += lr;
        if (i < n_lo) continue;
        const double N = static_cast<double>(i);
        MembershipRow row;
        row.n = i;
        row.omega1 = static_cast<double>(large) >= N * dense;
        row.omega2 = log_prod > -2.0 * params.lyapunov * params.k * N;
        row.omega3 = static_cast<double>(wide) >= N * dense;
        row.omega4 = log_small >= 2.0 * N * small_ratio_mean;
        report.omega1 = report.omega1 && row.omega1;
        report.omega2 = report.omega2 && row.omega2;
        report.omega3 = report.omega3 && row.omega3;
        report.omega4 = report.omega4 && row.omega4;
        report.rows.push_back(row);
    }
    return report;
}

double omega_star_failure_rate(const ClassTable& table, const LDParams& params, std::size_t n_hi,
                               std::size_t n_omega, std::uint64_t seed) {
    if (n_omega == 0) throw ValidationError("need at least one omega");
    std::vector<char> fail(n_omega);
    parallel_for(n_omega, [&](std::size_t i) {
        const auto omega = sample_omega(table, n_hi, mix64(seed ^ mix64(i + 1)));
        fail[i] = !check_omega_membership(table, omega, params, params.n_start, n_hi).omega_star();
    });
    return static_cast<double>(std::count(fail.begin(), fail.end(), 1)) / static_cast<double>(n_omega);
}

// ---------------------------------------------------------------------------

void split_nearest(double v, double& p, double& eps) {
    p = std::floor(v + 0.5);
    eps = v - p;
    if (eps >= 0.5) {
        p += 1.0;
        eps -= 1.0;
    } else if (eps < -0.5) {
        p -= 1.0;
        eps += 1.0;
    }
}

EKDiagnostics ek_diagnostics(const ClassTable& table, const OmegaSample& omega, double xi, const LDParams& params,
                             std::optional<double> T) {
    EKDiagnostics out;
    out.T = T ? *T : std::max(std::abs(xi), std::exp(1.0));
    if (!(out.T > 0.0)) throw ValidationError("T must be positive");
    out.eps_star = params.eps_star();
    OmegaSample w = omega;
    // N_omega: minimal N >= 1 with |T prod_{i<=N+1} r| < 1.
    std::vector<double> scale{1.0};  // scale[i] = prod_{j<=i} r
    auto ratio_at = [&](std::size_t i) {  // 1-based
        extend_omega(table, w, i);
        return table.classes[w.classes[i - 1]].ratio;
    };
    std::size_t N = 1;
    scale.push_back(ratio_at(1));
    scale.push_back(scale[1] * ratio_at(2));
    while (!(std::abs(out.T * scale[N + 1]) < 1.0)) {
        if (N > 10'000'000) throw BudgetExhausted("N_omega search did not terminate", static_cast<double>(N));
        ++N;
        scale.push_back(scale.back() * ratio_at(N + 1));
    }
    out.n_omega = N;
    const double size_threshold = params.size_threshold();
    const double floor = params.ratio_floor();
    for (std::size_t i = 1; i <= N; ++i) {
        const auto& c = table.classes[w.classes[i - 1]];
        if (static_cast<double>(c.size) < size_threshold || std::abs(c.ratio) < floor || c.size < 2) continue;
        DecayLevel level;
        level.index = i;
        level.value = xi * c.pair_gap() * scale[i - 1];
        split_nearest(level.value, level.p, level.eps);
        level.bad = std::abs(level.eps) <= out.eps_star;
        if (level.bad) out.bad.push_back(out.levels.size());
        out.levels.push_back(level);
    }
    if (out.levels.empty()) out.warnings.push_back("no decay levels up to N_omega");
    return out;
}

double circle_sum_bound(std::span<const double> weights, double delta) {
    if (!(delta > 0.0 && delta <= M_PI)) throw ValidationError("gap delta must lie in (0, pi]");
    if (weights.size() < 2) throw ValidationError("circle sum bound needs at least two weights");
    double pmin = weights[0];
    for (double p : weights) {
        if (!(p > 0.0)) throw ValidationError("circle sum weights must be positive");
        pmin = std::min(pmin, p);
    }
    return std::sqrt(std::max(0.0, 1.0 - 2.0 * pmin * pmin * (1.0 - std::cos(delta))));
}

}  // namespace ffl
