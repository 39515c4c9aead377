#include "ffl/equidist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ffl/error.hpp"

namespace ffl {

namespace {

constexpr double kTwo128 = 0x1.0p128;

double window_value(const std::vector<std::uint8_t>& d, std::size_t start, int base, int width) {
    double v = 0.0;
    for (int j = width; j-- > 0;) v = (v + d[start + j]) / base;
    return v;
}

int window_width(int base) { return static_cast<int>(std::ceil(64.0 / std::log2(base))); }

double dist_to_int(double y) { return std::abs(y - std::nearbyint(y)); }

}  // namespace

Sequence Sequence::geometric(int base) {
    if (base < 2 || base > 36) throw ValidationError("geometric base must be an integer in [2, 36]");
    Sequence s;
    s.kind_ = Kind::Geometric;
    s.base_ = base;
    return s;
}

Sequence Sequence::lacunary(std::vector<std::uint64_t> q, double K) {
    if (!(K > 1.0)) throw ValidationError("lacunarity constant must exceed 1");
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0) throw ValidationError("lacunary terms must be natural numbers");
        if (i > 0 && !(static_cast<double>(q[i]) / static_cast<double>(q[i - 1]) > K))
            throw ValidationError("lacunarity fails at n = " + std::to_string(i + 1));
    }
    Sequence s;
    s.kind_ = Kind::Lacunary;
    s.ints_ = std::move(q);
    return s;
}

Sequence Sequence::gapped(std::vector<double> q, double gap) {
    if (!(gap > 0.0)) throw ValidationError("gap bound must be positive");
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] > 0.0) || !std::isfinite(q[i])) throw ValidationError("sequence terms must be positive reals");
        if (i > 0 && !(q[i] - q[i - 1] >= gap)) throw ValidationError("gap bound fails at n = " + std::to_string(i + 1));
    }
    Sequence s;
    s.kind_ = Kind::Gapped;
    s.reals_ = std::move(q);
    bool integral = std::all_of(s.reals_.begin(), s.reals_.end(),
                                [](double v) { return v == std::floor(v) && v < 0x1.0p63; });
    if (integral)
        for (double v : s.reals_) s.ints_.push_back(static_cast<std::uint64_t>(v));
    return s;
}

Sequence Sequence::arithmetic(std::size_t N) {
    std::vector<double> q(N);
    for (std::size_t i = 0; i < N; ++i) q[i] = static_cast<double>(i + 1);
    return gapped(std::move(q), 1.0);
}

std::size_t Sequence::length() const {
    switch (kind_) {
        case Kind::Geometric: return PreciseReal::kUnlimited;
        case Kind::Lacunary: return ints_.size();
        default: return reals_.size();
    }
}

std::size_t bits_needed(const Sequence& seq, std::size_t N) {
    if (seq.kind() == Sequence::Kind::Geometric)
        return static_cast<std::size_t>(std::ceil((N + window_width(seq.base()) + 2) * std::log2(seq.base())));
    return 128;
}

std::vector<double> psi_values(const Expr& psi, std::size_t N) {
    if (psi.max_variable() > 0) throw ValidationError("psi must be an expression in n alone");
    std::vector<double> out(N);
    for (std::size_t n = 1; n <= N; ++n) {
        const double v = psi.eval(static_cast<double>(n));
        if (!(v >= 0.0 && v <= 0.5))
            throw ValidationError("psi(" + std::to_string(n) + ") = " + std::to_string(v) + " lies outside [0, 1/2]");
        out[n - 1] = v;
    }
    return out;
}

double sigma(const Expr& psi, std::size_t N) {
    const auto v = psi_values(psi, N);
    double sum = 0.0, comp = 0.0;
    for (double t : v) {
        const double y = t - comp;
        const double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    return sum;
}

std::vector<double> orbit(const PreciseReal& x, const Sequence& seq, std::size_t N) {
    if (N > seq.length())
        throw ValidationError("sequence has only " + std::to_string(seq.length()) + " terms, N = " + std::to_string(N));
    std::vector<double> out(N);
    const Rational* r = x.rational();
    switch (seq.kind()) {
        case Sequence::Kind::Geometric: {
            const int b = seq.base();
            if (r) {
                // Exact periodic orbit: frac(b^n p/q) = (b^n p mod q)/q.
                __int128 v = r->num % r->den;
                for (std::size_t n = 0; n < N; ++n) {
                    v = (v * b) % r->den;
                    out[n] = static_cast<double>(v) / static_cast<double>(r->den);
                }
                return out;
            }
            const int w = window_width(b);
            const std::size_t need = N + static_cast<std::size_t>(w);
            if (need > x.available_digits(b))
                throw BudgetExhausted("point carries too few base-" + std::to_string(b) + " digits for N = " +
                                          std::to_string(N),
                                      static_cast<double>(x.available_digits(b) > static_cast<std::size_t>(w)
                                                              ? x.available_digits(b) - w
                                                              : 0));
            const auto d = x.digits(b, need);
            for (std::size_t n = 0; n < N; ++n) out[n] = window_value(d, n + 1, b, w);
            return out;
        }
        case Sequence::Kind::Lacunary:
        case Sequence::Kind::Gapped: {
            if (!seq.integers().empty() || seq.kind() == Sequence::Kind::Lacunary) {
                const auto& q = seq.integers();
                if (r) {
                    for (std::size_t n = 0; n < N; ++n) {
                        const __int128 v = (static_cast<__int128>(q[n] % r->den) * r->num) % r->den;
                        out[n] = static_cast<double>(v) / static_cast<double>(r->den);
                    }
                    return out;
                }
                const unsigned __int128 X = x.fraction128();
                for (std::size_t n = 0; n < N; ++n)
                    out[n] = static_cast<double>(static_cast<unsigned __int128>(q[n]) * X) / kTwo128;
                return out;
            }
            // Real multipliers: q x in long double from the leading 64 bits.
            long double xv;
            if (r) {
                xv = static_cast<long double>(r->num) / r->den;
            } else {
                const unsigned __int128 X = x.fraction128();
                xv = static_cast<long double>(static_cast<std::uint64_t>(X >> 64)) * 0x1.0p-64L;
            }
            const auto& q = seq.reals();
            for (std::size_t n = 0; n < N; ++n) {
                const long double y = static_cast<long double>(q[n]) * xv;
                out[n] = static_cast<double>(y - std::floor(y));
            }
            return out;
        }
    }
    return out;
}

CountResult count_hits(const PreciseReal& x, const EquidistSpec& spec, double epsilon) {
    if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) throw ValidationError("gamma must lie in [0,1]");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    const auto psi = psi_values(spec.psi, spec.N);
    const auto y = orbit(x, spec.sequence, spec.N);
    CountResult out;
    out.N = spec.N;
    out.epsilon = epsilon;
    for (std::size_t n = 0; n < spec.N; ++n)
        if (dist_to_int(y[n] - spec.gamma) <= psi[n]) ++out.count;
    double comp = 0.0;
    for (double t : psi) {
        const double v = t - comp;
        const double s = out.sigma + v;
        comp = (s - out.sigma) - v;
        out.sigma = s;
    }
    out.two_sigma = 2.0 * out.sigma;
    const double diff = static_cast<double>(out.count) - out.two_sigma;
    const double logf = std::pow(std::log(out.sigma + 2.0), 2.0 + epsilon);
    const double s12 = std::sqrt(out.sigma) * logf;
    const double s23 = std::pow(out.sigma, 2.0 / 3.0) * logf;
    out.deviation = s12 > 0.0 ? diff / s12 : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    out.deviation_lacunary = s23 > 0.0 ? diff / s23 : out.deviation;
    return out;
}

std::vector<double> weyl_sums(const PreciseReal& x, const Sequence& seq, std::size_t N, int H) {
    if (H < 1) throw ValidationError("need at least one harmonic");
    if (N == 0) throw ValidationError("need N >= 1");
    const auto y = orbit(x, seq, N);
    std::vector<double> out(H);
    for (int h = 1; h <= H; ++h) {
        Complex s{0.0, 0.0};
        for (double v : y) s += character(h * v);  // e(h q x) = e(h frac(q x)) for integer h
        out[h - 1] = std::abs(s) / static_cast<double>(N);
    }
    return out;
}

double DigitFrequency::frequency(int d) const {
    if (digits.empty()) return 0.0;
    return static_cast<double>(histogram.at(d)) / static_cast<double>(digits.size());
}

DigitFrequency digit_freq(const PreciseReal& x, int base, std::size_t N) {
    DigitFrequency out;
    out.base = base;
    out.digits = x.digits(base, N);
    out.histogram.assign(base, 0);
    for (auto d : out.digits) ++out.histogram[d];
    if (N > 0) {
        const double expect = static_cast<double>(N) / base;
        for (auto c : out.histogram) out.chi_square += (c - expect) * (c - expect) / expect;
    }
    return out;
}

}  // namespace ffl
