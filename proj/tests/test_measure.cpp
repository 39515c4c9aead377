#include <chrono>
#include <cmath>

#include "doctest.h"
#include "ffl/error.hpp"
#include "ffl/measure.hpp"
#include "ffl/parallel.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace ffl;

TEST_CASE("sampling: Dirac, dyadic mean, Cantor gap") {
    SampleOptions opts;
    opts.tol = 1e-12;
    auto d = sample_points(sys::dirac(), 100, opts, 1);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(d.at(i, 0)) <= 1e-12);

    auto u = sample_points(sys::dyadic(), 100000, opts, 2);
    double mean = 0.0;
    for (double x : u.coords) mean += x;
    mean /= u.size();
    CHECK(std::abs(mean - 0.5) < 0.01);
    CHECK(u.achieved_tol <= 1e-12);

    auto c = sample_points(sys::cantor(), 20000, opts, 3);
    for (double x : c.coords) CHECK_FALSE((x > 1.0 / 3 + 1e-12 && x < 2.0 / 3 - 1e-12));

    SampleOptions fixed;
    fixed.depth = 5;
    auto f = sample_points(sys::cantor(), 10, fixed, 4);
    CHECK(f.achieved_tol == doctest::Approx(std::pow(3.0, -5)));
    for (int depth : f.depth) CHECK(depth == 5);
}

TEST_CASE("sampling is deterministic and independent of the thread count") {
    SampleOptions opts;
    set_thread_count(1);
    auto a = sample_points(sys::two_ratio(), 10000, opts, 9);
    set_thread_count(4);
    auto b = sample_points(sys::two_ratio(), 10000, opts, 9);
    set_thread_count(0);
    CHECK(a.coords == b.coords);
    auto c = sample_points(sys::two_ratio(), 10000, opts, 10);
    CHECK(a.coords != c.coords);
}

TEST_CASE("sample points lie in the cylinder of their prefix") {
    auto s = sys::two_ratio();
    SampleOptions opts;
    opts.depth = 3;
    auto pts = sample_points(s, 2000, opts, 5);
    auto hull = attractor_hull(s);
    // Every point is phi_w(0) with |w| = 3; with 0 in the hull it lies in phi_w(hull).
    int inside = 0;
    for (double x : pts.coords) {
        bool hit = false;
        for (int a = 0; a < 2 && !hit; ++a)
            for (int b = 0; b < 2 && !hit; ++b)
                for (int c = 0; c < 2 && !hit; ++c) {
                    auto m = compose(s, Word{{a, b, c}});
                    auto img = m.image({hull});
                    hit = img[0].lo - 1e-15 <= x && x <= img[0].hi + 1e-15;
                }
        inside += hit;
    }
    CHECK(inside == 2000);
}

TEST_CASE("fourier_exact against closed forms") {
    auto d = sys::dyadic();
    CHECK(std::abs(fourier_exact(d, 1.0, 1e-6).value) <= 1e-6);
    auto half = fourier_exact(d, 0.5, 1e-6);
    CHECK(std::abs(half.value - Complex(0.0, -2.0 / M_PI)) <= 1e-6);
    for (double xi : {0.5, 1.0, 7.25, 100.0, -3.3, 0.01}) {
        auto v = fourier_exact(d, xi, 1e-7);
        CHECK(v.error <= 1e-7 + 1e-12);
        CHECK(std::abs(v.value - oracle::lebesgue_ft(xi)) <= v.error + 1e-12);
    }
    auto zero = fourier_exact(sys::cantor(), 0.0, 1e-6);
    CHECK(zero.value == Complex(1.0, 0.0));
    CHECK(zero.error == 0.0);
}

TEST_CASE("Cantor transform is constant along powers of three") {
    auto c = sys::cantor();
    const double tol = 1e-8;
    auto base = fourier_exact(c, 1.0, tol);
    CHECK(std::abs(base.value - oracle::cantor_ft(1.0)) <= base.error + 1e-12);
    double xi = 1.0;
    for (int n = 0; n <= 10; ++n, xi *= 3.0) {
        auto v = fourier_exact(c, xi, tol);
        CHECK(std::abs(v.value - base.value) <= 2 * tol + 1e-12);
        // Functional equation mu^(3 xi) = (1 + e(2 xi)) / 2 * mu^(xi).
        auto lower = fourier_exact(c, xi / 3.0, tol);
        auto rhs = 0.5 * (1.0 + oracle::e(2.0 * xi / 3.0)) * lower.value;
        CHECK(std::abs(v.value - rhs) <= v.error + lower.error + 1e-12);
    }
}

TEST_CASE("budget exhaustion relaxes the tolerance and says so") {
    auto v = fourier_exact(sys::dyadic(), 100.0, 1e-9, 1000);
    CHECK(v.budget_exhausted);
    CHECK(v.error > 1e-9);
    CHECK(std::abs(v.value - oracle::lebesgue_ft(100.0)) <= v.error);
}

TEST_CASE("Monte Carlo character sums") {
    const double xs[] = {0.0, 1.0, 17.5};
    auto dirac = fourier_montecarlo(measure_sampler(sys::dirac()), xs, 1000, 1);
    for (const auto& v : dirac) {
        CHECK(std::abs(v.value - Complex(1.0, 0.0)) <= 1e-9);
        CHECK(v.kind == ErrorKind::Statistical);
    }
    const double one[] = {1.0};
    const std::size_t m = 1000000;
    auto u = fourier_montecarlo(measure_sampler(sys::dyadic()), one, m, 2);
    CHECK(std::abs(u[0].value) <= 4.0 / std::sqrt(double(m)));
    CHECK(u[0].standard_error <= 1.0 / std::sqrt(double(m)));
    auto c = fourier_montecarlo(measure_sampler(sys::cantor()), one, m, 3);
    CHECK(std::abs(c[0].value - fourier_exact(sys::cantor(), 1.0, 1e-9).value) <= 4.0 / std::sqrt(double(m)));
}

TEST_CASE("homogeneous product formula") {
    auto c = sys::cantor();
    auto p = fourier_product_homogeneous(c, 1.0, 40);
    CHECK(std::abs(p.value - fourier_exact(c, 1.0, 1e-10).value) <= 1e-8);
    CHECK(fourier_product_homogeneous(c, 0.0, 3).value == Complex(1, 0));
    CHECK(std::abs(fourier_product_homogeneous(sys::dyadic(), 2.0, 40).value) <= 1e-8);
    CHECK_THROWS_AS(fourier_product_homogeneous(sys::two_ratio(), 1.0, 10), ValidationError);
}

TEST_CASE("Frostman profiles") {
    SampleOptions opts;
    std::vector<double> radii, grid;
    for (int k = 3; k <= 10; ++k) radii.push_back(std::ldexp(1.0, -k));
    for (int i = 0; i <= 4096; ++i) grid.push_back(i / 4096.0);

    auto u = sample_points(sys::dyadic(), 200000, opts, 1).coords;
    CHECK(std::abs(frostman_profile(u, radii, grid).slope - 1.0) <= 0.1);

    auto d = sample_points(sys::dirac(), 10000, opts, 1).coords;
    auto pd = frostman_profile(d, radii, grid);
    for (const auto& row : pd.rows) CHECK(row.max_mass == 1.0);
    CHECK(std::abs(pd.slope) <= 1e-12);

    auto c = sample_points(sys::cantor(), 200000, opts, 1).coords;
    CHECK(std::abs(frostman_profile(c, radii, grid).slope - std::log(2.0) / std::log(3.0)) <= 0.05);

    CHECK_THROWS_AS(frostman_profile(std::vector<double>(10, 0.0), radii, grid), ValidationError);
    const double not_dyadic[] = {0.3};
    CHECK_THROWS_AS(frostman_profile(u, not_dyadic, grid), ValidationError);
}

TEST_CASE("cylinder decomposition") {
    auto s = sys::two_ratio();
    auto dec = cylinder_decomposition(s, 1e-3);
    double total = 0.0;
    for (const auto& c : dec.cylinders) {
        total += c.weight;
        CHECK(c.diameter <= 1e-3);
        auto m = compose(s, c.word).as_affine();
        CHECK(c.anchor[0] == doctest::Approx(m.translate).epsilon(1e-12));
        CHECK(c.diameter >= std::abs(m.ratio) * (attractor_hull(s).width()) * (1 - 1e-12));
    }
    CHECK(std::abs(total - 1.0) <= 1e-10);
    CHECK(dec.tail_mass <= 1e-10);
}

TEST_CASE("property: evaluator bounds, symmetry and cross-method agreement") {
    auto c = sys::cantor();
    auto s = sys::two_ratio();
    CounterRng rng(11, 0);
    std::vector<double> xs;
    for (int i = 0; i < 20; ++i) xs.push_back(-100.0 + 200.0 * rng.uniform());
    const std::size_t m = 200000;
    auto mc = fourier_montecarlo(measure_sampler(c), xs, m, 5);
    auto mc2 = fourier_montecarlo(measure_sampler(s), xs, m, 6);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double xi = xs[i];
        auto ex = fourier_exact(c, xi, 1e-8);
        auto pr = fourier_product_homogeneous(c, xi, 60);
        CHECK(std::abs(ex.value) <= 1.0 + ex.error);
        CHECK(std::abs(pr.value) <= 1.0 + pr.error);
        CHECK(std::abs(mc[i].value) <= 1.0 + mc[i].error);
        CHECK(std::abs(ex.value - pr.value) <= ex.error + pr.error);
        CHECK(std::abs(ex.value - mc[i].value) <= ex.error + mc[i].error);
        auto neg = fourier_exact(c, -xi, 1e-8);
        CHECK(std::abs(neg.value - std::conj(ex.value)) <= 2e-8);

        auto ex2 = fourier_exact(s, xi, 1e-8);
        CHECK(std::abs(ex2.value) <= 1.0 + ex2.error);
        CHECK(std::abs(ex2.value - mc2[i].value) <= ex2.error + mc2[i].error);
        CHECK(std::abs(fourier_exact(s, -xi, 1e-8).value - std::conj(ex2.value)) <= 2e-8);
    }
}

TEST_CASE("property: translation covariance") {
    // x -> x + c conjugates phi_a to x -> r_a x + t_a + c (1 - r_a).
    CounterRng rng(12, 0);
    auto s = sys::two_ratio();
    for (int trial = 0; trial < 10; ++trial) {
        const double shift = rng.uniform() - 0.5;
        const double xi = 50.0 * (rng.uniform() - 0.5);
        const AffineMap maps[] = {{0.5, shift * 0.5, {}, {}}, {1.0 / 3, 2.0 / 3 + shift * 2.0 / 3, {}, {}}};
        const double w[] = {0.5, 0.5};
        auto shifted = make_affine_cifs(maps, w);
        auto base = fourier_exact(s, xi, 1e-9);
        auto moved = fourier_exact(shifted, xi, 1e-9);
        CHECK(std::abs(moved.value - oracle::e(xi * shift) * base.value) <= base.error + moved.error);
    }
}
