#include <doctest.h>

#include <cmath>

#include "ffl/equidist.hpp"
#include "ffl/error.hpp"
#include "ffl/precise.hpp"
#include "systems.hpp"

using namespace ffl;

namespace {

EquidistSpec spec(int b, double gamma, const char* psi, std::size_t N) {
    return {Sequence::geometric(b), gamma, Expr::parse(psi), N};
}

PreciseReal uniform_sample(std::uint64_t seed, std::size_t bits) {
    CounterRng rng(seed, 0);
    return sample_precise(sys::dyadic(), bits, rng);
}

std::uint64_t pow_mod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    unsigned __int128 r = 1 % m, x = b % m;
    for (; e; e >>= 1, x = x * x % m)
        if (e & 1) r = r * x % m;
    return static_cast<std::uint64_t>(r);
}

}  // namespace

TEST_CASE("partial sums of psi") {
    CHECK(sigma(Expr::parse("0.5"), 10) == 5.0);
    CHECK(sigma(Expr::parse("(div 1 (mul 2 x))"), 4) == doctest::Approx(25.0 / 24).epsilon(1e-14));
    CHECK(sigma(Expr::parse("0"), 50) == 0.0);
    CHECK_THROWS_WITH_AS(sigma(Expr::parse("(div 2 x)"), 10), doctest::Contains("psi(1)"), ValidationError);
    CHECK_THROWS_WITH_AS(sigma(Expr::parse("(div x 6)"), 10), doctest::Contains("psi(4)"),
                         ValidationError);
}

TEST_CASE("counting examples") {
    auto zero = count_hits(PreciseReal::from_rational({0, 1}), spec(2, 0.0, "0.1", 100));
    CHECK(zero.count == 100);
    auto third = count_hits(PreciseReal::from_rational({1, 3}), spec(2, 0.0, "0.25", 100));
    CHECK(third.count == 0);
    // The same third, held as a double (a dyadic rational), collapses to 0 after 54 doublings.
    auto collapsed = count_hits(PreciseReal::from_double(1.0 / 3), spec(2, 0.0, "0.25", 100));
    CHECK(collapsed.count > 40);
    auto one = count_hits(PreciseReal::from_rational({1, 1}), spec(3, 0.0, "0", 20));
    CHECK(one.count == 20);
    CHECK(third.sigma == doctest::Approx(25.0));
    CHECK(third.two_sigma == doctest::Approx(50.0));
}

TEST_CASE("digit conversions are exact") {
    auto third = PreciseReal::from_digits(3, {1}, true);
    CHECK(third.digits(2, 200) == PreciseReal::from_rational({1, 3}).digits(2, 200));
    auto half = PreciseReal::from_rational({1, 2});
    auto d = half.digits(2, 5);
    CHECK(d == std::vector<std::uint8_t>{1, 0, 0, 0, 0});
    CHECK(PreciseReal::from_rational({1, 3}).digits(3, 4) == std::vector<std::uint8_t>{1, 0, 0, 0});
    auto partial = PreciseReal::from_digits(3, std::vector<std::uint8_t>(100, 2), false);
    CHECK(partial.available_digits(3) == 100);
    CHECK(partial.available_digits(2) < 159);
    CHECK_THROWS_AS(partial.digits(3, 101), BudgetExhausted);
    CHECK_THROWS_AS(count_hits(partial, spec(3, 0.0, "0.1", 90)), BudgetExhausted);
    CHECK_THROWS_AS(PreciseReal::from_rational({3, 2}), ValidationError);
    CHECK(PreciseReal::from_double(0.625).digits(2, 4) == std::vector<std::uint8_t>{1, 0, 1, 0});
}

TEST_CASE("property: rational orbits agree with modular exponentiation") {
    CounterRng rng(31, 0);
    for (int i = 0; i < 20; ++i) {
        const std::int64_t q = 2 + static_cast<std::int64_t>(rng.below(10000));
        const std::int64_t p = static_cast<std::int64_t>(rng.below(q));
        const int b = 2 + static_cast<int>(rng.below(9));
        const double psi0 = 0.01 + 0.3 * rng.uniform();
        const double gamma = rng.uniform();
        const std::size_t N = 500;
        std::size_t expect = 0;
        for (std::size_t n = 1; n <= N; ++n) {
            const std::uint64_t v = static_cast<std::uint64_t>(
                static_cast<unsigned __int128>(pow_mod(b, n, q)) * static_cast<std::uint64_t>(p) % q);
            const double y = static_cast<double>(v) / q - gamma;
            if (std::abs(y - std::nearbyint(y)) <= psi0) ++expect;
        }
        EquidistSpec s{Sequence::geometric(b), gamma, Expr::constant(psi0), N};
        CHECK(count_hits(PreciseReal::from_rational({p, q}), s).count == expect);
    }
}

TEST_CASE("property: counts are monotone in psi and N") {
    auto x = uniform_sample(3, 4000);
    std::size_t prev = 0;
    for (double psi0 : {0.01, 0.05, 0.1, 0.2, 0.5}) {
        EquidistSpec s{Sequence::geometric(2), 0.3, Expr::constant(psi0), 2000};
        auto c = count_hits(x, s).count;
        CHECK(c >= prev);
        prev = c;
    }
    CHECK(prev == 2000);
    prev = 0;
    for (std::size_t N : {10, 100, 1000, 3000}) {
        auto c = count_hits(x, spec(2, 0.0, "(div 1 (mul 2 x))", N)).count;
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("property: constant psi gives frequency 2 psi0 for uniform samples") {
    const double psi0 = 0.1;
    const std::size_t N = 100000;
    EquidistSpec s{Sequence::geometric(2), 0.0, Expr::constant(psi0), N};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto x = uniform_sample(seed, bits_needed(s.sequence, N));
        auto c = count_hits(x, s);
        CHECK(std::abs(static_cast<double>(c.count) / N - 2 * psi0) <= 3.0 * std::sqrt(2 * psi0 / N) * 3.0);
    }
}

TEST_CASE("shrinking targets stay inside the iterated-logarithm band") {
    const std::size_t N = 100000;
    auto s = spec(2, 0.0, "(div 1 (mul 2 x))", N);
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto c = count_hits(uniform_sample(1000 + seed, bits_needed(s.sequence, N)), s, 1.0);
        if (std::abs(c.deviation) <= 1.0) ++inside;
        CHECK(c.count <= N);
    }
    CHECK(inside >= 190);
}

TEST_CASE("Weyl sums") {
    auto zero = weyl_sums(PreciseReal::from_rational({0, 1}), Sequence::geometric(2), 100, 4);
    for (double v : zero) CHECK(v == doctest::Approx(1.0));

    const std::size_t N = 100000;
    auto x = uniform_sample(77, 256);
    const double xv = x.to_double();
    auto lin = weyl_sums(x, Sequence::arithmetic(N), N, 1);
    const double dist = std::min(xv, 1.0 - xv);
    CHECK(lin[0] <= 1.0 / (2.0 * N * dist) + 1e-9);
    CHECK(lin[0] <= 0.05);

    int good = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto y = uniform_sample(500 + seed, bits_needed(Sequence::geometric(2), 2000));
        auto w = weyl_sums(y, Sequence::geometric(2), 2000, 5);
        if (*std::max_element(w.begin(), w.end()) <= 0.1) ++good;
    }
    CHECK(good >= 180);

    std::vector<std::uint64_t> lac;
    for (std::uint64_t q = 1; lac.size() < 40; q *= 3) lac.push_back(q + 1);
    auto l = weyl_sums(uniform_sample(9, 256), Sequence::lacunary(lac, 1.9), 40, 3);
    CHECK(l.size() == 3);
    CHECK_THROWS_AS(Sequence::lacunary({1, 2, 3}, 1.5), ValidationError);
    CHECK_THROWS_AS(Sequence::gapped({1.0, 1.5, 1.7}, 0.3), ValidationError);
    CHECK_THROWS_AS(weyl_sums(x, Sequence::arithmetic(10), 11, 1), ValidationError);
}

TEST_CASE("digit frequencies") {
    auto half = digit_freq(PreciseReal::from_rational({1, 2}), 2, 8);
    CHECK(half.digits == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 0, 0});
    auto third = digit_freq(PreciseReal::from_rational({1, 3}), 3, 5);
    CHECK(third.digits == std::vector<std::uint8_t>{1, 0, 0, 0, 0});

    CounterRng rng(12, 0);
    auto c = sample_precise(sys::cantor(), 1700, rng);
    auto f = digit_freq(c, 3, 1000);
    CHECK(f.frequency(1) <= 0.01);
    CHECK(f.frequency(0) + f.frequency(2) == doctest::Approx(1.0));

    auto u = digit_freq(uniform_sample(4, 20000), 2, 10000);
    CHECK(u.chi_square < 15.0);
}

TEST_CASE("precise sampling of affine measures") {
    CHECK(as_digit_system(sys::dyadic()).has_value());
    CHECK(as_digit_system(sys::cantor())->digit == std::vector<int>{0, 2});
    CHECK_FALSE(as_digit_system(sys::two_ratio()).has_value());

    auto s = sys::two_ratio();
    const auto mom = affine_moments(s);
    double mean = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(8, i);
        auto x = sample_precise(s, 300, rng);
        CHECK(x.available_digits(2) >= 300);
        mean += x.to_double();
    }
    mean /= n;
    CHECK(std::abs(mean - mom.mean) <= 4.0 * std::sqrt(mom.variance / n));
}

TEST_CASE("pushforward samples through the counting function") {
    // y uniform, x = y^2; constant psi0 targets have frequency 2 psi0 for almost every x.
    const auto F = Expr::parse("(pow x 2)");
    const std::size_t N = 3000;
    EquidistSpec s{Sequence::geometric(2), 0.0, Expr::constant(0.1), N};
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto y = uniform_sample(seed, bits_needed(s.sequence, N) + 64);
        auto x = apply_precise(F, y, bits_needed(s.sequence, N));
        total += static_cast<double>(count_hits(x, s).count) / N;
    }
    CHECK(std::abs(total / 20 - 0.2) <= 0.02);
    auto exact = apply_precise(F, PreciseReal::from_rational({1, 2}), 64);
    CHECK(exact.digits(2, 4) == std::vector<std::uint8_t>{0, 1, 0, 0});
}
