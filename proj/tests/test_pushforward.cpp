#include <doctest.h>

#include <cmath>
#include <set>

#include "ffl/error.hpp"
#include "ffl/pushforward.hpp"
#include "ffl/rng.hpp"
#include "oracles.hpp"
#include "systems.hpp"

using namespace ffl;

namespace {

FibreProduct carpet() {
    const double w = 1.0 / 3;
    return build_fibre_product({ContractionMap::affine(0.5, 0.0), ContractionMap::affine(0.5, 0.5)},
                               {{{1.0 / 3, 0.0, {}, {}}, {1.0 / 3, 2.0 / 3, {}, {}}}, {{1.0 / 3, 1.0 / 3, {}, {}}}},
                               {{w, w}, {w}});
}

}  // namespace

TEST_CASE("map norms") {
    auto y2 = SmoothMapF::parse("(pow y 2)", 2);
    auto n = map_norms(y2, 256);
    CHECK(n.sup1 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(n.sup2 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(n.min2 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(n.certified);
    CHECK_NOTHROW(require_nonvanishing_curvature(n));

    auto cube = map_norms(SmoothMapF::parse("(pow x 3)"), 1024);
    CHECK(cube.min2 == 0.0);
    CHECK_THROWS_AS(require_nonvanishing_curvature(cube), ValidationError);

    auto q = map_norms(SmoothMapF::parse("(add (pow x 2) (mul 0.5 x))"), 4096);
    CHECK(std::abs(q.sup1 - 2.5) <= 1e-9);
    CHECK(std::abs(q.sup2 - 2.0) <= 1e-9);
    CHECK(std::abs(q.min2 - 2.0) <= 1e-9);

    auto cert = map_norms(SmoothMapF::parse("(pow x 3)"), 1024, 6.0);
    CHECK(cert.certified);
    CHECK(cert.sup2 >= 6.0);

    CHECK_THROWS_AS(map_norms(y2, 128), ValidationError);
    CHECK_THROWS_AS(SmoothMapF::parse("(pow y 2)", 1), ValidationError);
}

TEST_CASE("symbolic partials agree with central differences") {
    const char* exprs[] = {"(add (pow x 3) (mul 0.5 x))", "(exp (mul 0.7 x))", "(sin (mul 2 x))",
                           "(mul (add x 1) (pow x 2))"};
    CounterRng rng(11, 0);
    for (const char* text : exprs) {
        auto F = SmoothMapF::parse(text);
        for (int i = 0; i < 20; ++i) {
            const double x = 0.05 + 0.9 * rng.uniform();
            const double h = 1e-5;
            const double fd1 = (F(x + h) - F(x - h)) / (2 * h);
            const double fd2 = (F.d1().eval(x + h) - F.d1().eval(x - h)) / (2 * h);
            CHECK(std::abs(fd1 - F.d1().eval(x)) <= 1e-5 * std::max(1.0, std::abs(fd1)));
            CHECK(std::abs(fd2 - F.d2().eval(x)) <= 1e-5 * std::max(1.0, std::abs(fd2)));
        }
    }
}

TEST_CASE("pushforward by the identity equals the measure transform") {
    auto id = SmoothMapF::parse("x");
    for (auto s : {sys::dyadic(), sys::cantor(), sys::two_ratio()}) {
        for (double xi : {0.7, 3.0, 27.5}) {
            auto a = pushforward_fourier(id, s, xi, 1e-8);
            auto b = fourier_exact(s, xi, 1e-8);
            CHECK(std::abs(a.value - b.value) <= a.error + b.error);
            CHECK(a.error <= 1e-7);
        }
    }
}

TEST_CASE("pushforward by x^2 of Lebesgue matches quadrature") {
    auto F = SmoothMapF::parse("(pow x 2)");
    auto v = pushforward_fourier(F, sys::dyadic(), 10.0, 1e-8);
    auto ref = oracle::integrate([](double x) { return oracle::e(10.0 * x * x); }, 0.0, 1.0, 1e-12);
    CHECK(std::abs(v.value - ref) <= 1e-6);
    CHECK(v.error <= 1e-6);
    auto osc = oracle::oscillatory([](double x) { return x * x; }, 2.0, 10.0, 1e-12);
    CHECK(std::abs(osc - ref) <= 1e-9);
}

TEST_CASE("pushforward in two dimensions") {
    auto fp = carpet();
    auto cifs = fp.as_cifs();
    auto Fy = SmoothMapF::parse("y", 2);
    // F(x,y) = y pushes the carpet measure to the fibre marginal, a middle-thirds
    // uniform measure on {0,1/3,2/3} digits, i.e. Lebesgue on [0,1].
    for (double xi : {0.5, 2.0, 4.5}) {
        auto v = pushforward_fourier(Fy, cifs, xi, 1e-5);
        CHECK(v.error <= 1e-4);
        CHECK(std::abs(v.value - oracle::lebesgue_ft(xi)) <= v.error);
    }
    CHECK_THROWS_AS(pushforward_fourier(SmoothMapF::parse("x"), cifs, 1.0, 1e-6), ValidationError);
}

TEST_CASE("property: affine covariance of the pushforward") {
    CounterRng rng(5, 1);
    auto s = sys::two_ratio();
    for (int i = 0; i < 10; ++i) {
        const double a = 0.25 + 1.5 * rng.uniform();
        const double b = 2.0 * rng.uniform() - 1.0;
        const double xi = 40.0 * rng.uniform() - 20.0;
        auto F = SmoothMapF(Expr::constant(a) * Expr::variable(0) + Expr::constant(b), 1);
        auto v = pushforward_fourier(F, s, xi, 1e-8);
        auto m = fourier_exact(s, a * xi, 1e-8);
        CHECK(std::abs(v.value - character(xi * b) * m.value) <= v.error + m.error);
    }
}

TEST_CASE("property: chain rule for affine compositions") {
    auto F = SmoothMapF::parse("(add (pow x 3) (exp x))");
    CounterRng rng(9, 2);
    for (int i = 0; i < 20; ++i) {
        const double r = 0.1 + 0.8 * rng.uniform(), t = (1 - r) * rng.uniform();
        const Expr inner = Expr::constant(r) * Expr::variable(0) + Expr::constant(t);
        const Expr comp = F.expr().substitute(std::span<const Expr>(&inner, 1));
        const double x = rng.uniform();
        CHECK(std::abs(comp.derivative(0).eval(x) - F.d1().eval(r * x + t) * r) <= 1e-9);
        CHECK(std::abs(comp.derivative(0).derivative(0).eval(x) - F.d2().eval(r * x + t) * r * r) <= 1e-9);
    }
}

TEST_CASE("stopping words") {
    auto W = stopping_words(sys::dyadic(), 64.0, 0.5);
    CHECK(W.words.size() == 8);
    for (const auto& w : W.words) CHECK(w.word.size() == 3);

    auto s = sys::two_ratio();
    auto V = stopping_words(s, 64.0, 0.5);
    // Brute force over depth <= 6.
    std::set<std::vector<int>> expected;
    const double thr = 1.0 / 8;
    std::vector<double> r{0.5, 1.0 / 3};
    for (int len = 1; len <= 6; ++len)
        for (int code = 0; code < (1 << len); ++code) {
            std::vector<int> w;
            double prod = 1.0, prefix = 1.0;
            for (int i = 0; i < len; ++i) {
                w.push_back((code >> (len - 1 - i)) & 1);
                prefix = prod;
                prod *= r[w.back()];
            }
            if (prod <= thr && prefix > thr) expected.insert(w);
        }
    std::set<std::vector<int>> got;
    for (const auto& w : V.words) got.insert(w.word.letters);
    CHECK(got == expected);
    CHECK(got.count({0, 0, 0}) == 1);
    CHECK(got.count({0, 1}) == 0);
    CHECK(got.count({0, 1, 1}) == 1);

    auto single = stopping_words(sys::dyadic(), 1.5, 0.01);
    CHECK(single.words.size() == 2);

    CHECK_THROWS_AS(stopping_words(s, 0.5, 0.5), ValidationError);
    CHECK_THROWS_AS(stopping_words(s, 4.0, 1.0), ValidationError);
}

TEST_CASE("property: stopping sets are prefix-free with the two-sided ratio bound") {
    CounterRng rng(3, 3);
    auto s = sys::affine({{"1/2", "0"}, {"1/3", "2/3"}, {"1/5", "1/2"}}, {0.5, 0.3, 0.2});
    for (int i = 0; i < 10; ++i) {
        const double xi = 2.0 + 1000.0 * rng.uniform();
        const double delta = 0.05 + 0.9 * rng.uniform();
        auto W = stopping_words(s, xi, delta);
        const double thr = std::pow(xi, -delta);
        double mass = 0.0;
        std::set<std::vector<int>> all;
        for (const auto& w : W.words) {
            all.insert(w.word.letters);
            mass += w.weight;
            double prod = 1.0, prefix = 1.0;
            for (int l : w.word.letters) {
                prefix = prod;
                prod *= std::abs(s.symbol(l).map.as_affine().ratio);
            }
            CHECK(prod <= thr);
            CHECK(prefix > thr);
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& w : all)
            for (std::size_t len = 1; len < w.size(); ++len)
                CHECK(all.count(std::vector<int>(w.begin(), w.begin() + len)) == 0);
    }
}

TEST_CASE("zero cover") {
    const double radii[] = {1e-6, 1e-4, 1e-2};
    auto sq = zero_cover(Expr::parse("(pow x 2)"), radii);
    REQUIRE(sq.zeros.size() == 1);
    CHECK(sq.zeros[0] == doctest::Approx(0.0));
    CHECK(sq.multiplicity[0] == 2);
    CHECK(sq.k == 2);
    CHECK(sq.C == doctest::Approx(2.0));
    CHECK(sq.r_max == 1e-2);

    auto lin = zero_cover(Expr::parse("(mul x (sub 1 x))"), radii);
    REQUIRE(lin.zeros.size() == 2);
    CHECK(lin.zeros[0] == doctest::Approx(0.0));
    CHECK(lin.zeros[1] == doctest::Approx(1.0));
    CHECK(lin.multiplicity[0] == 1);
    CHECK(lin.multiplicity[1] == 1);
    CHECK(lin.r_max == 1e-2);

    auto none = zero_cover(Expr::parse("(add 1 (pow x 2))"), radii);
    CHECK(none.zeros.empty());
    CHECK(none.r_max == 1e-2);

    auto inner = zero_cover(Expr::parse("(pow (sub x 0.3) 3)"), radii);
    REQUIRE(inner.zeros.size() == 1);
    CHECK(inner.zeros[0] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(inner.multiplicity[0] == 3);

    CHECK_THROWS_AS(zero_cover(Expr::parse("(exp x)"), radii), ValidationError);
    CHECK_THROWS_AS(zero_cover(Expr::parse("(sub x x)"), radii), ValidationError);
}

TEST_CASE("split Fourier sums") {
    auto conv = split_fourier(SmoothMapF::parse("(add (pow x 2) x)"), sys::dyadic(), 300.0, 0.5, 0.2, 1e-8);
    CHECK(conv.bad_words == 0);
    CHECK(conv.bad_mass == 0.0);
    CHECK(std::abs(conv.good_sum - conv.full.value) <= conv.good_error + conv.full.error);
    CHECK(conv.consistent);

    const double xi = std::pow(3.0, 6);
    auto cube = split_fourier(SmoothMapF::parse("(pow x 3)"), sys::cantor(), xi, 0.5, 0.2, 1e-8);
    CHECK(cube.consistent);
    CHECK(cube.bad_words > 0);
    // Monte Carlo mass of the neighbourhood of 0, padded by one cylinder length.
    SampleOptions so;
    auto pts = sample_points(sys::cantor(), 200000, so, 17).coords;
    const double reach = cube.radius + std::pow(xi, -0.5);
    double near = 0.0;
    for (double p : pts)
        if (p < reach) near += 1.0;
    near /= pts.size();
    CHECK(cube.bad_mass <= near + 4.0 * std::sqrt(near / pts.size()) + 1e-12);

    CounterRng rng(21, 0);
    auto F = SmoothMapF::parse("(add (pow x 3) (mul 0.5 (pow x 2)))");
    for (int i = 0; i < 10; ++i) {
        const double f = 10.0 * std::pow(1000.0, rng.uniform());
        const double tol = 1e-3;
        auto s = split_fourier(F, sys::two_ratio(), f, 0.5, 0.2, tol);
        CHECK(s.reconstruction_gap <= 2.0 * tol);
    }
}

TEST_CASE("prefix decompositions") {
    auto convex = prefix_decomposition(SmoothMapF::parse("(pow x 2)"), sys::cantor(), 10);
    REQUIRE(convex.words.size() == 1);
    CHECK(convex.words[0].size() == 0);
    CHECK(convex.covered_mass == 1.0);

    for (int depth : {2, 5, 8}) {
        auto cube = prefix_decomposition(SmoothMapF::parse("(pow x 3)"), sys::cantor(), depth);
        CHECK(cube.uncovered_mass == doctest::Approx(std::pow(0.5, depth)));
        CHECK(cube.covered_mass + cube.uncovered_mass == doctest::Approx(1.0));
    }

    auto cifs = carpet().as_cifs();
    auto Fy = SmoothMapF::parse("(pow y 3)", 2);
    double prev = 1.0;
    for (int depth : {2, 4, 6}) {
        auto d = prefix_decomposition(Fy, cifs, depth);
        CHECK(d.covered_mass >= 1.0 - std::pow(3.0, -depth) - 1e-12);
        CHECK(d.uncovered_mass <= prev);
        prev = d.uncovered_mass;
    }
    // Sampled points fall in certified cylinders at the expected rate.
    auto d = prefix_decomposition(Fy, cifs, 6);
    SampleOptions so;
    auto pts = sample_points(cifs, 20000, so, 4);
    double inside = 0.0;
    for (std::size_t i = 0; i < pts.coords.size() / 2; ++i)
        if (pts.coords[2 * i + 1] > std::pow(3.0, -6)) inside += 1.0;
    inside /= pts.coords.size() / 2;
    CHECK(std::abs(inside - d.covered_mass) <= 0.01);
}

TEST_CASE("conjugated systems") {
    auto psi = sys::affine({{"1/4", "0"}, {"1/4", "3/4"}});
    auto id = conjugate_ifs(psi, SmoothMapF::parse("x"), Expr::parse("x"), 0, 1);
    REQUIRE(id.system.size() == 2);
    CHECK(id.system.symbol(1).map.as_affine().ratio == doctest::Approx(0.25));
    CHECK(id.system.symbol(1).map.as_affine().translate == doctest::Approx(0.75));

    auto half = conjugate_ifs(psi, SmoothMapF::parse("(mul 0.5 x)"), Expr::parse("(mul 2 x)"), 0, 1);
    CHECK(half.system.symbol(0).map.as_affine().ratio == doctest::Approx(0.25));

    auto sq = conjugate_ifs(psi, SmoothMapF::parse("(pow x 2)"), Expr::parse("(sqrt x)"), 100000, 8);
    CHECK(sq.samples == 100000);
    CHECK(sq.ks_distance >= 0.0);
    CHECK(sq.ks_distance <= 0.02);
    const double x = 0.36;
    const double expect = std::pow((std::sqrt(x) + 3.0) / 4.0, 2);
    std::vector<double> in{x}, out(1);
    sq.system.symbol(1).map.apply(in, out);
    CHECK(out[0] == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(conjugate_ifs(psi, SmoothMapF::parse("(pow x 2)"), Expr::parse("x"), 0, 1), ValidationError);
    CHECK_THROWS_AS(conjugate_ifs(psi, SmoothMapF::parse("(mul 4 (mul x (sub 1 x)))"), Expr::parse("x"), 0, 1),
                    ValidationError);
}

TEST_CASE("KS distance") {
    CHECK(ks_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_distance({0, 0}, {1, 1}) == 1.0);
    CHECK(ks_distance({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
}

TEST_CASE("decay direction for a curved pushforward of the Cantor measure") {
    auto F = SmoothMapF::parse("(add (pow x 2) x)");
    std::vector<double> maxima;
    for (int j = 2; j <= 7; ++j) {
        double m = 0.0;
        const double T = std::pow(2.0, j);
        for (int i = 0; i < 24; ++i) {
            const double xi = T * (1.0 + i / 24.0);
            m = std::max(m, std::abs(pushforward_fourier(F, sys::cantor(), xi, 1e-5).value));
        }
        maxima.push_back(m);
    }
    CHECK(maxima.back() < maxima.front());
    CHECK(maxima.back() < 0.5);
}
