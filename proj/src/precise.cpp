#include "ffl/precise.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "ffl/error.hpp"

namespace ffl {

namespace {

struct Mpz {
    mpz_t v;
    Mpz() { mpz_init(v); }
    ~Mpz() { mpz_clear(v); }
    Mpz(const Mpz&) = delete;
    Mpz& operator=(const Mpz&) = delete;
};

struct Mpfr {
    mpfr_t v;
    explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v, prec); }
    ~Mpfr() { mpfr_clear(v); }
    Mpfr(const Mpfr&) = delete;
    Mpfr& operator=(const Mpfr&) = delete;
};

void check_base(int b) {
    if (b < 2 || b > 36) throw ValidationError("digit base must lie in [2, 36], got " + std::to_string(b));
}

char digit_char(int d) { return static_cast<char>(d < 10 ? '0' + d : 'a' + d - 10); }

int char_digit(char c) { return c <= '9' ? c - '0' : c - 'a' + 10; }

/// Digits of the integer X in base b, left-padded with zeros to width m.
std::vector<std::uint8_t> padded_digits(const mpz_t X, int b, std::size_t m) {
    std::vector<std::uint8_t> out(m, 0);
    if (mpz_sgn(X) == 0) return out;
    std::string s(mpz_sizeinbase(X, b) + 2, '\0');
    mpz_get_str(s.data(), b, X);
    s.resize(std::char_traits<char>::length(s.c_str()));
    if (s.size() > m) s.erase(0, s.size() - m);  // integer part dropped: frac only
    const std::size_t off = m - s.size();
    for (std::size_t i = 0; i < s.size(); ++i) out[off + i] = static_cast<std::uint8_t>(char_digit(s[i]));
    return out;
}

}  // namespace

PreciseReal PreciseReal::from_rational(Rational r) {
    r = make_rational(r.num, r.den);
    if (r.num < 0 || r.num > r.den) throw ValidationError("point " + to_string(r) + " lies outside [0,1]");
    return PreciseReal(r);
}

PreciseReal PreciseReal::from_double(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("point lies outside [0,1]");
    std::vector<std::uint8_t> bits;
    double y = x == 1.0 ? 0.0 : x;
    while (y != 0.0) {
        y *= 2.0;  // exact
        const int d = y >= 1.0;
        bits.push_back(static_cast<std::uint8_t>(d));
        y -= d;
    }
    if (x == 1.0) return PreciseReal(Rational{1, 1});
    return PreciseReal(Digits{2, std::move(bits), true});
}

PreciseReal PreciseReal::from_digits(int base, std::vector<std::uint8_t> digits, bool exact) {
    check_base(base);
    for (auto d : digits)
        if (d >= base) throw ValidationError("digit out of range for base " + std::to_string(base));
    return PreciseReal(Digits{base, std::move(digits), exact});
}

bool PreciseReal::exact() const {
    if (std::holds_alternative<Rational>(repr_)) return true;
    return std::get<Digits>(repr_).exact;
}

double PreciseReal::to_double() const {
    if (const auto* r = rational()) return r->value();
    const auto& d = std::get<Digits>(repr_);
    double v = 0.0;
    const std::size_t n = std::min<std::size_t>(d.digits.size(), 80);
    for (std::size_t i = n; i-- > 0;) v = (v + d.digits[i]) / d.base;
    return v;
}

std::size_t PreciseReal::available_digits(int b) const {
    check_base(b);
    if (exact()) return kUnlimited;
    const auto& d = std::get<Digits>(repr_);
    if (d.base == b) return d.digits.size();
    const double n = std::floor(static_cast<double>(d.digits.size()) * std::log(d.base) / std::log(b));
    return n > 1.0 ? static_cast<std::size_t>(n) - 1 : 0;
}

std::vector<std::uint8_t> PreciseReal::digits(int b, std::size_t m) const {
    const std::size_t avail = available_digits(b);
    if (m > avail)
        throw BudgetExhausted("requested " + std::to_string(m) + " base-" + std::to_string(b) +
                                  " digits but only " + std::to_string(avail) + " are determined",
                              static_cast<double>(avail));
    if (const auto* r = rational()) {
        std::vector<std::uint8_t> out(m);
        __int128 rem = r->num % r->den;
        for (std::size_t i = 0; i < m; ++i) {
            rem *= b;
            out[i] = static_cast<std::uint8_t>(rem / r->den);
            rem %= r->den;
        }
        return out;
    }
    const auto& d = std::get<Digits>(repr_);
    if (d.base == b) {
        std::vector<std::uint8_t> out(m, 0);
        std::copy_n(d.digits.begin(), std::min(m, d.digits.size()), out.begin());
        return out;
    }
    // floor(X b^m / c^L) with X the integer formed by the L source digits.
    Mpz X, num, den;
    if (!d.digits.empty()) {
        std::string s(d.digits.size(), '0');
        for (std::size_t i = 0; i < d.digits.size(); ++i) s[i] = digit_char(d.digits[i]);
        mpz_set_str(X.v, s.c_str(), d.base);
    }
    mpz_ui_pow_ui(num.v, static_cast<unsigned long>(b), m);
    mpz_mul(num.v, num.v, X.v);
    mpz_ui_pow_ui(den.v, static_cast<unsigned long>(d.base), d.digits.size());
    mpz_fdiv_q(num.v, num.v, den.v);
    return padded_digits(num.v, b, m);
}

unsigned __int128 PreciseReal::fraction128() const {
    const auto bits = digits(2, 128);
    unsigned __int128 v = 0;
    for (auto bit : bits) v = (v << 1) | bit;
    return v;
}

// ---------------------------------------------------------------------------

std::optional<DigitSystem> as_digit_system(const Cifs& cifs) {
    if (!cifs.is_affine_line() || cifs.tail_mass() > 0.0) return std::nullopt;
    DigitSystem out;
    for (const auto& s : cifs.symbols()) {
        const auto& a = s.map.as_affine();
        if (!a.exact_ratio || !a.exact_translate) return std::nullopt;
        const Rational r = *a.exact_ratio, t = *a.exact_translate;
        if (r.num != 1 || r.den < 2 || r.den > 36) return std::nullopt;
        if (out.base == 0) out.base = static_cast<int>(r.den);
        if (r.den != out.base) return std::nullopt;
        // t = k/m with 0 <= k < m.
        if (out.base % t.den != 0) return std::nullopt;
        const std::int64_t k = t.num * (out.base / t.den);
        if (k < 0 || k >= out.base) return std::nullopt;
        out.digit.push_back(static_cast<int>(k));
    }
    return out;
}

PreciseReal sample_precise(const Cifs& cifs, std::size_t bits, CounterRng& rng) {
    if (!cifs.is_affine_line()) throw ValidationError("precise sampling needs an affine line system");
    const DiscreteSampler pick(cifs.weights());
    if (auto ds = as_digit_system(cifs)) {
        const std::size_t n = static_cast<std::size_t>(std::ceil(bits / std::log2(ds->base))) + 2;
        std::vector<std::uint8_t> d(n);
        for (auto& v : d) v = static_cast<std::uint8_t>(ds->digit[pick(rng)]);
        return PreciseReal::from_digits(ds->base, std::move(d), false);
    }
    // Generic affine system: x = phi_{a1} o ... o phi_{aL}(c) evaluated from the inside.
    const double rmax = cifs.contraction_bound();
    if (!(rmax < 1.0)) throw ValidationError("precise sampling needs strictly contracting maps");
    const auto L = static_cast<std::size_t>(std::ceil((bits + 8.0) / -std::log2(rmax))) + 1;
    std::vector<std::size_t> word(L);
    for (auto& a : word) a = pick(rng);
    const auto prec = static_cast<mpfr_prec_t>(bits + 64);
    Mpfr y(prec);
    mpfr_set_d(y.v, 0.5, MPFR_RNDN);
    for (std::size_t i = L; i-- > 0;) {
        const auto& m = cifs.symbol(word[i]).map.as_affine();
        if (m.exact_ratio) {
            mpfr_mul_si(y.v, y.v, m.exact_ratio->num, MPFR_RNDN);
            mpfr_div_si(y.v, y.v, m.exact_ratio->den, MPFR_RNDN);
        } else {
            mpfr_mul_d(y.v, y.v, m.ratio, MPFR_RNDN);
        }
        if (m.exact_translate) {
            Mpfr t(prec);
            mpfr_set_si(t.v, m.exact_translate->num, MPFR_RNDN);
            mpfr_div_si(t.v, t.v, m.exact_translate->den, MPFR_RNDN);
            mpfr_add(y.v, y.v, t.v, MPFR_RNDN);
        } else {
            mpfr_add_d(y.v, y.v, m.translate, MPFR_RNDN);
        }
    }

    if (mpfr_cmp_ui(y.v, 0) < 0) mpfr_set_ui(y.v, 0, MPFR_RNDN);
    if (mpfr_cmp_ui(y.v, 1) > 0) mpfr_set_ui(y.v, 1, MPFR_RNDN);
    Mpz X;
    mpfr_mul_2ui(y.v, y.v, bits, MPFR_RNDN);
    mpfr_get_z(X.v, y.v, MPFR_RNDD);
    return PreciseReal::from_digits(2, padded_digits(X.v, 2, bits), false);
}

namespace {

void eval_mpfr(const Expr& e, const mpfr_t x, mpfr_t out, mpfr_prec_t prec) {
    const auto kids = e.children();
    auto sub = [&](std::size_t i, Mpfr& dst) { eval_mpfr(kids[i], x, dst.v, prec); };
    switch (e.op()) {
        case Op::Const: mpfr_set_d(out, e.value(), MPFR_RNDN); return;
        case Op::Var:
            if (e.index() != 0) throw ValidationError("precise evaluation supports one variable");
            mpfr_set(out, x, MPFR_RNDN);
            return;
        case Op::Neg: {
            Mpfr a(prec);
            sub(0, a);
            mpfr_neg(out, a.v, MPFR_RNDN);
            return;
        }
        case Op::Pow: {
            Mpfr a(prec);
            sub(0, a);
            mpfr_pow_si(out, a.v, e.exponent(), MPFR_RNDN);
            return;
        }
        case Op::Sqrt:
        case Op::Exp:
        case Op::Log:
        case Op::Sin:
        case Op::Cos: {
            Mpfr a(prec);
            sub(0, a);
            switch (e.op()) {
                case Op::Sqrt: mpfr_sqrt(out, a.v, MPFR_RNDN); break;
                case Op::Exp: mpfr_exp(out, a.v, MPFR_RNDN); break;
                case Op::Log: mpfr_log(out, a.v, MPFR_RNDN); break;
                case Op::Sin: mpfr_sin(out, a.v, MPFR_RNDN); break;
                default: mpfr_cos(out, a.v, MPFR_RNDN); break;
            }
            return;
        }
        default: {
            Mpfr a(prec), b(prec);
            sub(0, a);
            sub(1, b);
            switch (e.op()) {
                case Op::Add: mpfr_add(out, a.v, b.v, MPFR_RNDN); break;
                case Op::Sub: mpfr_sub(out, a.v, b.v, MPFR_RNDN); break;
                case Op::Mul: mpfr_mul(out, a.v, b.v, MPFR_RNDN); break;
                default: mpfr_div(out, a.v, b.v, MPFR_RNDN); break;
            }
        }
    }
}

}  // namespace

PreciseReal apply_precise(const Expr& F, const PreciseReal& x, std::size_t bits) {
    if (F.max_variable() > 0) throw ValidationError("precise evaluation supports one variable");
    const auto prec = static_cast<mpfr_prec_t>(bits + 64);
    const std::size_t have = std::min(x.available_digits(2), bits + 64);
    const auto xb = x.digits(2, have);
    Mpz X;
    std::string s(have, '0');
    for (std::size_t i = 0; i < have; ++i) s[i] = static_cast<char>('0' + xb[i]);
    if (have > 0) mpz_set_str(X.v, s.c_str(), 2);
    Mpfr xv(prec), y(prec);
    mpfr_set_z_2exp(xv.v, X.v, -static_cast<long>(have), MPFR_RNDN);
    if (const auto* r = x.rational(); r && r->num == r->den) mpfr_set_ui(xv.v, 1, MPFR_RNDN);
    eval_mpfr(F, xv.v, y.v, prec);
    if (!mpfr_number_p(y.v)) throw ValidationError("F is not finite at the sampled point");
    if (mpfr_cmp_ui(y.v, 0) < 0 || mpfr_cmp_ui(y.v, 1) > 0) throw ValidationError("F maps the point outside [0,1]");
    Mpz Y;
    mpfr_mul_2ui(y.v, y.v, bits, MPFR_RNDN);
    mpfr_get_z(Y.v, y.v, MPFR_RNDD);
    return PreciseReal::from_digits(2, padded_digits(Y.v, 2, bits), false);
}

}  // namespace ffl
