#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "ffl/disintegration.hpp"
#include "ffl/error.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace ffl;

namespace {

AffineMap am(double r, double t) { return {r, t, {}, {}}; }

/// Alphabet {s1, s2, u}: s1, s2 the separated pair, u a third map.
FibreProduct three_symbol() {
    return build_fibre_product({ContractionMap::affine(0.5, 0.0)}, {{am(0.25, 0.0), am(0.25, 0.75), am(0.5, 0.25)}},
                               {{0.3, 0.3, 0.4}});
}

/// Brute force: words equivalent when they agree outside the special slots.
struct Brute {
    std::map<std::vector<int>, std::vector<std::vector<int>>> classes;
};

Brute brute_classes(const FibreProduct& fp, int k) {
    const int A = static_cast<int>(fp.alphabet().size());
    std::set<int> special;
    for (int i = 0; i < A; ++i)
        if (fp.is_special(fp.alphabet()[i])) special.insert(i);
    Brute b;
    std::vector<int> w(k, 0);
    while (true) {
        std::vector<int> key = w;
        for (int& a : key)
            if (special.count(a)) a = -1;
        b.classes[key].push_back(w);
        int pos = k - 1;
        while (pos >= 0 && ++w[pos] == A) w[pos--] = 0;
        if (pos < 0) break;
    }
    return b;
}

}  // namespace

TEST_CASE("class table examples") {
    auto fp = three_symbol();
    auto t1 = build_classes(fp, 1);
    REQUIRE(t1.classes.size() == 2);
    std::multiset<std::size_t> sizes1;
    for (const auto& c : t1.classes) sizes1.insert(c.size);
    CHECK(sizes1 == std::multiset<std::size_t>{1, 2});

    auto t2 = build_classes(fp, 2);
    std::multiset<std::size_t> sizes2;
    for (const auto& c : t2.classes) sizes2.insert(c.size);
    CHECK(sizes2 == std::multiset<std::size_t>{1, 2, 2, 4});

    for (const auto& c : t2.classes)
        if (c.special_slots.empty()) CHECK(c.size == 1);
}

TEST_CASE("class table brute-force agreement") {
    std::vector<FibreProduct> systems = {three_symbol(), fibre_product_from_line(sys::cantor()),
                                         fibre_product_from_line(sys::affine({{"1/4", "0"}, {"1/4", "3/4"}, {"1/3", "1/3"}, {"1/5", "1/2"}}))};
    // Two base maps with distinct fibre families.
    systems.push_back(build_fibre_product({ContractionMap::affine(0.5, 0.0), ContractionMap::affine(0.5, 0.5)},
                                          {{am(1.0 / 3, 0.0), am(1.0 / 3, 2.0 / 3)}, {am(1.0 / 3, 1.0 / 3), am(0.2, 0.1)}},
                                          {{0.25, 0.25}, {0.3, 0.2}}));
    for (const auto& fp : systems) {
        const std::size_t A = fp.alphabet().size();
        REQUIRE(A <= 5);
        for (int k = 1; k <= 3; ++k) {
            auto table = build_classes(fp, k);
            auto brute = brute_classes(fp, k);
            CHECK(table.classes.size() == brute.classes.size());
            std::size_t total = 0;
            double qsum = 0.0;
            std::set<std::vector<int>> seen;
            for (const auto& c : table.classes) {
                total += c.size;
                qsum += c.q;
                CHECK(c.size == (std::size_t{1} << c.special_slots.size()));
                CHECK(c.translates.size() == c.size);
                double pa = 1.0;
                for (int a : c.representative.letters) pa *= fp.weight(fp.alphabet()[a]);
                CHECK(c.q == doctest::Approx(pa * c.size).epsilon(1e-14));
                std::vector<Interval> images;
                for (std::size_t m = 0; m < c.size; ++m) {
                    auto w = c.member(m);
                    CHECK(seen.insert(w.letters).second);
                    double r = 1.0, t = 0.0, p = 1.0;
                    for (int a : w.letters) {
                        const auto& f = fp.fibre_map(fp.alphabet()[a]);
                        t += r * f.translate;
                        r *= f.ratio;
                        p *= fp.weight(fp.alphabet()[a]);
                    }
                    CHECK(r == doctest::Approx(c.ratio).epsilon(1e-14));
                    CHECK(p == doctest::Approx(c.member_weight).epsilon(1e-14));
                    CHECK(t == doctest::Approx(c.translates[m]).epsilon(1e-14));
                    images.push_back(Interval::hull(t, t + r));
                    // Same brute-force class as the representative.
                    std::vector<int> key = w.letters, rkey = c.representative.letters;
                    for (int& a : key) if (fp.is_special(fp.alphabet()[a])) a = -1;
                    for (int& a : rkey) if (fp.is_special(fp.alphabet()[a])) a = -1;
                    CHECK(key == rkey);
                }
                for (std::size_t i = 0; i < images.size(); ++i)
                    for (std::size_t j = i + 1; j < images.size(); ++j)
                        CHECK((images[i].hi < images[j].lo || images[j].hi < images[i].lo));
            }
            CHECK(total == static_cast<std::size_t>(std::pow(A, k)));
            CHECK(seen.size() == total);
            CHECK(std::abs(qsum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("class enumeration budget") {
    CHECK_THROWS_AS(build_classes(three_symbol(), 20), BudgetExhausted);
}

TEST_CASE("omega sampling") {
    // Point mass: the Cantor line gives a single class.
    auto cantor_table = build_classes(fibre_product_from_line(sys::cantor()), 2);
    REQUIRE(cantor_table.classes.size() == 1);
    auto w = sample_omega(cantor_table, 50, 1);
    for (int c : w.classes) CHECK(c == 0);

    auto table = build_classes(three_symbol(), 1);
    // q = (0.6 for the pair, 0.4 for u).
    const std::size_t M = 30000;
    auto omega = sample_omega(table, M, 7);
    double count = 0;
    int pair = table.classes[0].size == 2 ? 0 : 1;
    for (int c : omega.classes) count += c == pair;
    const double q = table.classes[pair].q;
    CHECK(q == doctest::Approx(0.6));
    CHECK(std::abs(count / M - q) <= 3 * std::sqrt(q * (1 - q) / M));

    auto other = sample_omega(table, M, 8);
    CHECK(other.classes != omega.classes);
    auto prefix = sample_omega(table, 100, 7);
    CHECK(std::equal(prefix.classes.begin(), prefix.classes.end(), omega.classes.begin()));

    auto ratios = cumulative_ratios(table, prefix);
    for (std::size_t i = 1; i < ratios.size(); ++i) CHECK(std::abs(ratios[i]) < std::abs(ratios[i - 1]));
}

TEST_CASE("mu_omega transforms") {
    auto table = build_classes(three_symbol(), 2);
    auto omega = sample_omega(table, 200, 3);
    CHECK(mu_omega_fourier(table, omega, 0.0, 50).value == Complex(1.0, 0.0));
    CHECK_THROWS_AS(mu_omega_fourier(table, omega, 1.0, 500), ValidationError);

    // Sequence of size-one classes: a Dirac measure.
    ClassTable dirac = table;
    int unit = -1;
    for (std::size_t i = 0; i < dirac.classes.size(); ++i)
        if (dirac.classes[i].size == 1) unit = static_cast<int>(i);
    OmegaSample ones{0, std::vector<int>(60, unit)};
    for (double xi : {0.7, 13.0, 250.0}) CHECK(std::abs(std::abs(mu_omega_fourier(dirac, ones, xi, 60).value) - 1.0) <= 1e-12);

    // Cantor as a one-block disintegration.
    auto cantor_fp = fibre_product_from_line(sys::cantor());
    auto ct = build_classes(cantor_fp, 1);
    auto cw = sample_omega(ct, 10, 1);
    auto v = mu_omega_fourier_tol(ct, cw, 1.0, 1e-10);
    auto ex = fourier_exact(sys::cantor(), 1.0, 1e-10);
    CHECK(std::abs(v.value - ex.value) <= v.error + ex.error);
    CHECK(std::abs(v.value - oracle::cantor_ft(1.0)) <= v.error + 1e-12);
}

TEST_CASE("mu_omega samples agree with its transform") {
    auto table = build_classes(three_symbol(), 2);
    auto omega = sample_omega(table, 10, 5);
    auto pts = sample_mu_omega(table, omega, 200000, 9);
    for (double xi : {1.0, 4.5, 20.0}) {
        Complex s{0, 0};
        for (double x : pts) s += oracle::e(xi * x);
        s /= double(pts.size());
        auto v = mu_omega_fourier_tol(table, omega, xi, 1e-10);
        CHECK(std::abs(s - v.value) <= 4.0 / std::sqrt(double(pts.size())) + v.error);
    }
}

TEST_CASE("disintegration consistency examples") {
    const double any[] = {0.3, 2.0, 17.0};
    auto cantor = disintegration_consistency(fibre_product_from_line(sys::cantor()), 2, any, 20, 1);
    for (const auto& row : cantor.rows) {
        CHECK(row.pass);
        CHECK(row.z_score == 0.0);
        CHECK(row.standard_error <= 1e-12);
    }
    const double half[] = {0.5};
    auto dy = disintegration_consistency(fibre_product_from_line(sys::dyadic()), 2, half, 4000, 2);
    CHECK(dy.pass());
    CHECK(std::abs(dy.rows[0].mean - Complex(0, -2.0 / M_PI)) <= 4 * dy.rows[0].standard_error + 1e-6);

    const double xs[] = {1.0, 2.0, 5.0};
    auto two = disintegration_consistency(fibre_product_from_line(sys::two_ratio()), 2, xs, 4000, 3);
    CHECK(two.pass());
}

TEST_CASE("alpha calibration and thresholds") {
    auto fp = fibre_product_from_line(sys::two_ratio());
    CHECK(fp.iteration() == 2);
    auto table = build_classes(fp, 4);
    auto cal = calibrate_alpha(table, 1);
    CHECK(cal.small_class_mass == doctest::Approx(5.0 / 16).epsilon(1e-12));
    CHECK(cal.alpha == 0.1);
    CHECK(std::abs(cal.monte_carlo_mass - 5.0 / 16) <= 4 * std::sqrt(5.0 / 16 * 11.0 / 16 / 1e5));
    auto p = make_ld_params(table, cal.alpha, 1);
    CHECK(p.size_threshold() == doctest::Approx(2.0));
    CHECK(p.eps_star() == doctest::Approx(p.gap * std::exp(-2 * std::exp(0.3)) / 5));
}

TEST_CASE("membership flags") {
    // Cantor: every class has size 2^k and ratio 3^-k.
    auto table = build_classes(fibre_product_from_line(sys::cantor()), 3);
    auto p = make_ld_params(table, 1.0, 1);
    auto omega = sample_omega(table, 40, 1);
    REQUIRE(2 * p.lyapunov * p.k >= -std::log(std::abs(table.classes[0].ratio)));
    REQUIRE(std::abs(table.classes[0].ratio) >= p.ratio_floor());
    auto rep = check_omega_membership(table, omega, p, 1, 40);
    CHECK(rep.omega_star());
    CHECK(rep.rows.size() == 40);
    CHECK_THROWS_AS(check_omega_membership(table, omega, p, 1, 41), ValidationError);

    // One strongly contracting class among N = 10.
    auto fp = build_fibre_product({ContractionMap::affine(0.5, 0.0)},
                                  {{am(0.45, 0.0), am(0.45, 0.55), am(1e-9, 0.5)}}, {{0.45, 0.45, 0.1}});
    auto t = build_classes(fp, 1);
    int tiny = -1, big = -1;
    for (std::size_t i = 0; i < t.classes.size(); ++i) (t.classes[i].size == 1 ? tiny : big) = static_cast<int>(i);
    for (double alpha : {0.2, 0.5, 0.6, 1.0}) {
        auto lp = make_ld_params(t, alpha, 1);
        OmegaSample w{0, std::vector<int>(10, big)};
        w.classes[4] = tiny;
        const bool below = 1e-9 < lp.ratio_floor();
        auto r = check_omega_membership(t, w, lp, 10, 10);
        if (below) CHECK(r.rows[0].omega3 == (10 * std::exp(-alpha) >= 1.0));
        else CHECK(r.rows[0].omega3);
    }
}

TEST_CASE("failure rate of membership decreases with N'") {
    auto table = build_classes(fibre_product_from_line(sys::two_ratio()), 4);
    auto cal = calibrate_alpha(table, 1);
    double prev = 2.0;
    for (std::size_t start : {1, 4, 16}) {
        auto p = make_ld_params(table, cal.alpha, start);
        const double rate = omega_star_failure_rate(table, p, 64, 2000, 5);
        CHECK(rate <= prev + 0.02);
        prev = rate;
    }
}

TEST_CASE("Erdos-Kahane diagnostics") {
    double p, e;
    split_nearest(20.0 / 27, p, e);
    CHECK(p == 1.0);
    CHECK(e == doctest::Approx(20.0 / 27 - 1).epsilon(1e-15));
    split_nearest(0.5, p, e);
    CHECK(e == -0.5);
    split_nearest(-0.5, p, e);
    CHECK(e == -0.5);
    CHECK(p == 0.0);

    auto fp = fibre_product_from_line(sys::cantor());
    auto table = build_classes(fp, 2);
    auto lp = make_ld_params(table, 1.0, 1);
    auto omega = sample_omega(table, 10, 1);
    auto zero = ek_diagnostics(table, omega, 0.0, lp, 1e6);
    REQUIRE_FALSE(zero.levels.empty());
    CHECK(zero.bad.size() == zero.levels.size());
    for (const auto& l : zero.levels) {
        CHECK(l.p == 0.0);
        CHECK(l.eps == 0.0);
    }
    // xi = 3^m * (3/2) * u: integral products at levels with k (i - 1) <= m.
    const int m = 6;
    const double xi = std::pow(3.0, m) * 1.5 * 7;
    auto d = ek_diagnostics(table, omega, xi, lp);
    CHECK(d.n_omega >= 1);
    for (const auto& l : d.levels) {
        CHECK(std::abs(l.p + l.eps - l.value) <= 1e-9);
        CHECK(l.eps >= -0.5);
        CHECK(l.eps < 0.5);
        if (2 * (static_cast<int>(l.index) - 1) <= m) CHECK(std::abs(l.eps) <= 1e-9);
    }
    // N_omega minimality.
    const auto ratios = cumulative_ratios(table, sample_omega(table, d.n_omega + 1, 1));
    CHECK(std::abs(d.T * ratios[d.n_omega]) < 1.0);
    if (d.n_omega > 1) CHECK(std::abs(d.T * ratios[d.n_omega - 1]) >= 1.0);
}

TEST_CASE("circle sum bound") {
    const double eq[] = {0.5, 0.5};
    CHECK(circle_sum_bound(eq, M_PI) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(circle_sum_bound(eq, M_PI / 2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    const double skew[] = {0.9, 0.1};
    CHECK(circle_sum_bound(skew, M_PI) == doctest::Approx(std::sqrt(0.96)).epsilon(1e-12));
    CHECK_THROWS_AS(circle_sum_bound(eq, 0.0), ValidationError);
    CHECK_THROWS_AS(circle_sum_bound(eq, 4.0), ValidationError);
}
