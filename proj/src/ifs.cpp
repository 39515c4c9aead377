#include "ffl/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <variant>

#include "ffl/error.hpp"

namespace ffl {

AffineMap AffineMap::after(const AffineMap& inner) const {
    AffineMap out;
    out.ratio = ratio * inner.ratio;
    out.translate = ratio * inner.translate + translate;
    if (exact_ratio && inner.exact_ratio) out.exact_ratio = checked_mul(*exact_ratio, *inner.exact_ratio);
    if (exact_ratio && exact_translate && inner.exact_translate)
        out.exact_translate = checked_fma(*exact_ratio, *inner.exact_translate, *exact_translate);
    if (!out.exact_ratio || !out.exact_translate) {
        out.exact_ratio.reset();
        out.exact_translate.reset();
    }
    return out;
}

AffineMap make_affine(const ParsedNumber& ratio, const ParsedNumber& translate) {
    AffineMap m{ratio.value, translate.value, ratio.exact, translate.exact};
    if (!m.exact_ratio || !m.exact_translate) {
        m.exact_ratio.reset();
        m.exact_translate.reset();
    }
    return m;
}

// ---------------------------------------------------------------------------

struct ContractionMap::Impl {
    struct SmoothData {
        std::vector<Expr> components;
        std::vector<std::vector<Expr>> jacobian;
        double lipschitz = 0.0;
    };
    struct ProductData {
        ContractionMap base;
        AffineMap fibre;
    };
    std::variant<AffineMap, SmoothData, ProductData> data;
};

namespace {

double smooth_grid_bound(const std::vector<Expr>& comps, const std::vector<std::vector<Expr>>& jac,
                         double derivative_lipschitz, bool require_contraction) {
    const int d = static_cast<int>(comps.size());
    // 2^-12 per axis, capped at 2^20 points in total.
    int per_axis = 4096;
    while (d > 1 && std::pow(static_cast<double>(per_axis + 1), d) > double(1 << 20)) per_axis /= 2;
    const double h = 1.0 / per_axis;
    std::vector<int> idx(d, 0);
    std::vector<double> pt(d, 0.0);
    double max_norm = 0.0;
    while (true) {
        for (int i = 0; i < d; ++i) pt[i] = idx[i] * h;
        for (int i = 0; i < d; ++i) {
            const double v = comps[i].eval(pt);
            if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-12) {
                if (require_contraction)
                    throw ValidationError("smooth map does not send the unit box into itself (component " +
                                          std::to_string(i) + " = " + std::to_string(v) + ")");
            }
            double row = 0.0;
            for (int j = 0; j < d; ++j) row += std::abs(jac[i][j].eval(pt));
            if (std::isfinite(row)) max_norm = std::max(max_norm, row);
            else max_norm = std::numeric_limits<double>::infinity();
        }
        int k = 0;
        while (k < d && ++idx[k] > per_axis) idx[k++] = 0;
        if (k == d) break;
    }
    return max_norm + derivative_lipschitz * h / 2.0;
}

}  // namespace

ContractionMap ContractionMap::affine(double ratio, double translate) {
    return affine(AffineMap{ratio, translate, std::nullopt, std::nullopt});
}

ContractionMap ContractionMap::affine(const AffineMap& map) {
    if (!(std::abs(map.ratio) > 0.0 && std::abs(map.ratio) < 1.0))
        throw ValidationError("affine contraction ratio must satisfy 0 < |r| < 1 (got " + std::to_string(map.ratio) +
                              ")");
    if (!std::isfinite(map.translate)) throw ValidationError("affine translate must be finite");
    return ContractionMap(std::make_shared<Impl>(Impl{map}));
}

ContractionMap ContractionMap::smooth(std::vector<Expr> components, double derivative_lipschitz,
                                      bool require_contraction) {
    if (components.empty()) throw ValidationError("smooth map needs at least one component");
    const int d = static_cast<int>(components.size());
    for (const auto& c : components)
        if (c.max_variable() >= d)
            throw ValidationError("smooth map component uses a variable beyond its dimension " + std::to_string(d));
    Impl::SmoothData data;
    data.jacobian.resize(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) data.jacobian[i].push_back(components[i].derivative(j));
    data.lipschitz = smooth_grid_bound(components, data.jacobian, derivative_lipschitz, require_contraction);
    data.components = std::move(components);
    if (require_contraction && !(data.lipschitz < 1.0))
        throw ValidationError("smooth map is not a contraction (Lipschitz bound " + std::to_string(data.lipschitz) +
                              ")");
    return ContractionMap(std::make_shared<Impl>(Impl{std::move(data)}));
}

ContractionMap ContractionMap::product(const ContractionMap& base, const AffineMap& fibre) {
    if (!(std::abs(fibre.ratio) > 0.0 && std::abs(fibre.ratio) < 1.0))
        throw ValidationError("fibre map ratio must satisfy 0 < |r| < 1");
    return ContractionMap(std::make_shared<Impl>(Impl{Impl::ProductData{base, fibre}}));
}

ContractionMap ContractionMap::identity(int dim) {
    if (dim == 1) return ContractionMap(std::make_shared<Impl>(Impl{AffineMap{1.0, 0.0, Rational{1, 1}, Rational{0, 1}}}));
    Impl::SmoothData data;
    data.jacobian.assign(dim, std::vector<Expr>(dim, Expr::constant(0.0)));
    for (int i = 0; i < dim; ++i) {
        data.components.push_back(Expr::variable(i));
        data.jacobian[i][i] = Expr::constant(1.0);
    }
    data.lipschitz = 1.0;
    return ContractionMap(std::make_shared<Impl>(Impl{std::move(data)}));
}

ContractionMap::Kind ContractionMap::kind() const {
    switch (impl_->data.index()) {
        case 0: return Kind::Affine;
        case 1: return Kind::Smooth;
        default: return Kind::Product;
    }
}

int ContractionMap::dim() const {
    if (const auto* s = std::get_if<Impl::SmoothData>(&impl_->data)) return static_cast<int>(s->components.size());
    if (const auto* p = std::get_if<Impl::ProductData>(&impl_->data)) return p->base.dim() + 1;
    return 1;
}

void ContractionMap::apply(std::span<const double> in, std::span<double> out) const {
    if (const auto* a = std::get_if<AffineMap>(&impl_->data)) {
        out[0] = (*a)(in[0]);
    } else if (const auto* s = std::get_if<Impl::SmoothData>(&impl_->data)) {
        if (in.data() == out.data()) {
            std::vector<double> tmp(in.begin(), in.end());
            for (std::size_t i = 0; i < s->components.size(); ++i) out[i] = s->components[i].eval(tmp);
        } else {
            for (std::size_t i = 0; i < s->components.size(); ++i) out[i] = s->components[i].eval(in);
        }
    } else {
        const auto& p = std::get<Impl::ProductData>(impl_->data);
        const auto d = static_cast<std::size_t>(p.base.dim());
        const double y = in[d];
        p.base.apply(in.first(d), out.first(d));
        out[d] = p.fibre(y);
    }
}

double ContractionMap::apply(double x) const {
    if (const auto* a = std::get_if<AffineMap>(&impl_->data)) return (*a)(x);
    double out = 0.0;
    apply(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
}

Box ContractionMap::image(const Box& box) const {
    if (const auto* a = std::get_if<AffineMap>(&impl_->data)) {
        return {Interval::hull(a->ratio * box[0].lo + a->translate, a->ratio * box[0].hi + a->translate)};
    }
    if (const auto* s = std::get_if<Impl::SmoothData>(&impl_->data)) {
        Box out;
        for (const auto& c : s->components) out.push_back(c.eval(std::span<const Interval>(box)));
        return out;
    }
    const auto& p = std::get<Impl::ProductData>(impl_->data);
    const auto d = static_cast<std::size_t>(p.base.dim());
    Box out = p.base.image(Box(box.begin(), box.begin() + d));
    out.push_back(Interval::hull(p.fibre(box[d].lo), p.fibre(box[d].hi)));
    return out;
}

double ContractionMap::lipschitz() const {
    if (const auto* a = std::get_if<AffineMap>(&impl_->data)) return std::abs(a->ratio);
    if (const auto* s = std::get_if<Impl::SmoothData>(&impl_->data)) return s->lipschitz;
    const auto& p = std::get<Impl::ProductData>(impl_->data);
    return std::max(p.base.lipschitz(), std::abs(p.fibre.ratio));
}

const AffineMap& ContractionMap::as_affine() const {
    if (const auto* a = std::get_if<AffineMap>(&impl_->data)) return *a;
    throw ValidationError("map is not an affine line map");
}

const ContractionMap& ContractionMap::base() const {
    if (const auto* p = std::get_if<Impl::ProductData>(&impl_->data)) return p->base;
    throw ValidationError("map is not a fibre product map");
}

const AffineMap& ContractionMap::fibre() const {
    if (const auto* p = std::get_if<Impl::ProductData>(&impl_->data)) return p->fibre;
    throw ValidationError("map is not a fibre product map");
}

const std::vector<Expr>& ContractionMap::components() const {
    if (const auto* s = std::get_if<Impl::SmoothData>(&impl_->data)) return s->components;
    throw ValidationError("map is not given by expressions");
}

std::vector<Expr> ContractionMap::expressions() const {
    if (const auto* a = std::get_if<AffineMap>(&impl_->data))
        return {Expr::constant(a->ratio) * Expr::variable(0) + Expr::constant(a->translate)};
    if (const auto* s = std::get_if<Impl::SmoothData>(&impl_->data)) return s->components;
    const auto& p = std::get<Impl::ProductData>(impl_->data);
    auto out = p.base.expressions();
    const int d = p.base.dim();
    out.push_back(Expr::constant(p.fibre.ratio) * Expr::variable(d) + Expr::constant(p.fibre.translate));
    return out;
}

ContractionMap ContractionMap::after(const ContractionMap& inner) const {
    if (dim() != inner.dim()) throw ValidationError("cannot compose maps of different dimension");
    const auto* a = std::get_if<AffineMap>(&impl_->data);
    const auto* b = std::get_if<AffineMap>(&inner.impl_->data);
    if (a && b) return ContractionMap(std::make_shared<Impl>(Impl{a->after(*b)}));
    const auto* p = std::get_if<Impl::ProductData>(&impl_->data);
    const auto* q = std::get_if<Impl::ProductData>(&inner.impl_->data);
    if (p && q)
        return ContractionMap(
            std::make_shared<Impl>(Impl{Impl::ProductData{p->base.after(q->base), p->fibre.after(q->fibre)}}));
    // General case: substitute the inner expressions. The product of the two
    // bounds is a valid Lipschitz bound for the composition.
    Impl::SmoothData data;
    const auto inner_exprs = inner.expressions();
    for (const auto& c : expressions()) data.components.push_back(c.substitute(inner_exprs));
    const int d = dim();
    data.jacobian.resize(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) data.jacobian[i].push_back(data.components[i].derivative(j));
    data.lipschitz = lipschitz() * inner.lipschitz();
    return ContractionMap(std::make_shared<Impl>(Impl{std::move(data)}));
}

// ---------------------------------------------------------------------------

Cifs::Cifs(std::vector<Symbol> symbols, Options options) : symbols_(std::move(symbols)), options_(std::move(options)) {
    if (symbols_.empty()) throw ValidationError("an IFS needs at least one map");
    if (!(options_.tail_mass >= 0.0 && options_.tail_mass < 1.0))
        throw ValidationError("tail mass must lie in [0, 1)");
    const int d = symbols_.front().map.dim();
    double total = 0.0;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        const auto& s = symbols_[i];
        if (s.map.dim() != d) throw ValidationError("all maps of an IFS must share a dimension");
        if (!(s.weight > 0.0)) throw ValidationError("weight of symbol '" + s.id + "' must be positive");
        total += s.weight;
        if (options_.require_contraction && !s.map.is_contraction())
            throw ValidationError("map '" + s.id + "' is not a contraction");
        for (std::size_t j = 0; j < i; ++j)
            if (symbols_[j].id == s.id) throw ValidationError("duplicate symbol id '" + s.id + "'");
    }
    if (std::abs(total + options_.tail_mass - 1.0) > 1e-12)
        throw ValidationError("weights sum to " + std::to_string(total) + " but must sum to 1 - tail mass = " +
                              std::to_string(1.0 - options_.tail_mass));
    if (options_.require_contraction && !(contraction_bound() < 1.0))
        throw ValidationError("IFS is not uniformly contracting");
    if (!options_.convergence_rates.empty() && options_.convergence_rates.size() != symbols_.size())
        throw ValidationError("convergence rates must match the alphabet");
}

std::optional<std::size_t> Cifs::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (symbols_[i].id == id) return i;
    return std::nullopt;
}

std::vector<double> Cifs::weights() const {
    std::vector<double> w;
    for (const auto& s : symbols_) w.push_back(s.weight);
    return w;
}

double Cifs::contraction_bound() const {
    double m = 0.0;
    for (const auto& s : symbols_) m = std::max(m, s.map.lipschitz());
    return m;
}

double Cifs::convergence_rate(std::size_t i) const {
    if (!options_.convergence_rates.empty()) return options_.convergence_rates[i];
    return symbols_[i].map.lipschitz();
}

bool Cifs::is_affine_line() const {
    return std::all_of(symbols_.begin(), symbols_.end(),
                       [](const Symbol& s) { return s.map.kind() == ContractionMap::Kind::Affine; });
}

std::vector<double> Cifs::ratios() const {
    std::vector<double> r;
    for (const auto& s : symbols_) r.push_back(s.map.as_affine().ratio);
    return r;
}

std::vector<double> Cifs::translates() const {
    std::vector<double> t;
    for (const auto& s : symbols_) t.push_back(s.map.as_affine().translate);
    return t;
}

Cifs make_affine_cifs(std::span<const AffineMap> maps, std::span<const double> weights, double tail_mass) {
    if (maps.size() != weights.size()) throw ValidationError("one weight per map is required");
    std::vector<Symbol> symbols;
    for (std::size_t i = 0; i < maps.size(); ++i)
        symbols.push_back({std::to_string(i), ContractionMap::affine(maps[i]), weights[i], std::nullopt});
    Cifs::Options opts;
    opts.tail_mass = tail_mass;
    return Cifs(std::move(symbols), opts);
}

// ---------------------------------------------------------------------------

Word Word::then(const Word& other) const {
    Word w = *this;
    w.letters.insert(w.letters.end(), other.letters.begin(), other.letters.end());
    return w;
}

Word Word::from_ids(const Cifs& cifs, std::span<const std::string> ids) {
    Word w;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto idx = cifs.index_of(ids[i]);
        if (!idx) throw ValidationError("unknown symbol '" + ids[i] + "' at word position " + std::to_string(i));
        w.letters.push_back(static_cast<int>(*idx));
    }
    return w;
}

namespace {
void check_letters(const Cifs& cifs, const Word& w) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w.letters[i] < 0 || static_cast<std::size_t>(w.letters[i]) >= cifs.size())
            throw ValidationError("unknown symbol " + std::to_string(w.letters[i]) + " at word position " +
                                  std::to_string(i));
}
}  // namespace

double word_ratio(const Cifs& cifs, const Word& w) {
    check_letters(cifs, w);
    double r = 1.0;
    for (int a : w.letters) {
        const auto& m = cifs.symbol(a).map;
        r *= m.kind() == ContractionMap::Kind::Affine ? m.as_affine().ratio : m.lipschitz();
    }
    return r;
}

double word_weight(const Cifs& cifs, const Word& w) {
    check_letters(cifs, w);
    double p = 1.0;
    for (int a : w.letters) p *= cifs.symbol(a).weight;
    return p;
}

ContractionMap compose(const Cifs& cifs, const Word& word) {
    check_letters(cifs, word);
    if (word.empty()) return ContractionMap::identity(cifs.dim());
    ContractionMap out = cifs.symbol(word.letters.back()).map;
    for (auto it = word.letters.rbegin() + 1; it != word.letters.rend(); ++it)
        out = cifs.symbol(*it).map.after(out);
    return out;
}

TailCheck tail_check(const Cifs& cifs, double tau) {
    if (!(tau > 0.0)) throw ValidationError("tail exponent tau must be positive");
    TailCheck out;
    double comp = 0.0;
    for (const auto& s : cifs.symbols()) {
        const double r = s.map.kind() == ContractionMap::Kind::Product ? s.map.fibre().ratio
                                                                       : s.map.as_affine().ratio;
        // Kahan summation.
        const double term = s.weight * std::pow(std::abs(r), -tau) - comp;
        const double t = out.value + term;
        comp = (t - out.value) - term;
        out.value = t;
    }
    if (cifs.tail_mass() > 0.0) {
        if (auto floor = cifs.tail_ratio_floor())
            out.tail_bound = cifs.tail_mass() * std::pow(*floor, -tau);
        else
            out.tail_bound = std::numeric_limits<double>::infinity();
    }
    out.finite = std::isfinite(out.value + out.tail_bound);
    return out;
}

double lyapunov(const Cifs& cifs) {
    double sum = 0.0;
    double comp = 0.0;
    for (const auto& s : cifs.symbols()) {
        double r = 0.0;
        if (s.map.kind() == ContractionMap::Kind::Affine) r = s.map.as_affine().ratio;
        else if (s.map.kind() == ContractionMap::Kind::Product) r = s.map.fibre().ratio;
        else throw ValidationError("Lyapunov exponent needs affine line or fibre product maps");
        const double term = s.weight * std::log(1.0 / std::abs(r)) - comp;
        const double t = sum + term;
        comp = (t - sum) - term;
        sum = t;
    }
    return sum;
}

Interval attractor_hull(const Cifs& cifs) {
    const auto r = cifs.ratios();
    const auto t = cifs.translates();
    // Start from the convex hull of fixed points and iterate the hull map to convergence.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double f = t[i] / (1.0 - r[i]);
        lo = std::min(lo, f);
        hi = std::max(hi, f);
    }
    for (int it = 0; it < 10000; ++it) {
        double nlo = std::numeric_limits<double>::infinity();
        double nhi = -nlo;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double a = r[i] * lo + t[i];
            const double b = r[i] * hi + t[i];
            nlo = std::min({nlo, a, b});
            nhi = std::max({nhi, a, b});
        }
        if (nlo == lo && nhi == hi) break;
        lo = std::min(lo, nlo);
        hi = std::max(hi, nhi);
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------

FibreProduct::FibreProduct(std::vector<ContractionMap> base, std::vector<std::vector<AffineMap>> fibres,
                           std::vector<std::vector<double>> weights, SeparatedPair pair, int iteration,
                           std::vector<std::string> base_labels)
    : base_(std::move(base)),
      fibres_(std::move(fibres)),
      weights_(std::move(weights)),
      pair_(pair),
      iteration_(iteration),
      base_labels_(std::move(base_labels)) {
    for (std::size_t j = 0; j < fibres_.size(); ++j)
        for (std::size_t l = 0; l < fibres_[j].size(); ++l)
            alphabet_.push_back({static_cast<int>(j), static_cast<int>(l)});
}

bool FibreProduct::is_special(const FibreSymbol& s) const {
    return s.base == pair_.base && (s.fibre == pair_.first || s.fibre == pair_.second);
}

Cifs FibreProduct::as_cifs() const {
    std::vector<Symbol> symbols;
    for (const auto& s : alphabet_) {
        symbols.push_back({base_labels_[s.base] + "." + std::to_string(s.fibre),
                           ContractionMap::product(base_[s.base], fibres_[s.base][s.fibre]), weight(s),
                           std::nullopt});
    }
    return Cifs(std::move(symbols));
}

double FibreProduct::lyapunov() const {
    double sum = 0.0;
    for (const auto& s : alphabet_) sum += weight(s) * std::log(1.0 / std::abs(fibre_map(s).ratio));
    return sum;
}

namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

bool disjoint(const Interval& a, const Interval& b) { return a.hi < b.lo || b.hi < a.lo; }

struct Candidate {
    SeparatedPair pair;
    bool found = false;
};

// Best separated pair (largest gap) among maps of one base family.
void scan_family(int j, const std::vector<AffineMap>& maps, const std::vector<double>& w, Candidate& best) {
    for (std::size_t a = 0; a < maps.size(); ++a) {
        for (std::size_t b = a + 1; b < maps.size(); ++b) {
            if (!same(maps[a].ratio, maps[b].ratio) || !same(w[a], w[b])) continue;
            if (!disjoint(maps[a].unit_image(), maps[b].unit_image())) continue;
            const double gap = std::abs(maps[b].translate - maps[a].translate);
            if (!best.found || gap > best.pair.gap) {
                best.found = true;
                best.pair = {j, static_cast<int>(a), static_cast<int>(b), maps[a].ratio, w[a], gap};
            }
        }
    }
}

}  // namespace

FibreProduct build_fibre_product(std::vector<ContractionMap> base, std::vector<std::vector<AffineMap>> fibres,
                                 std::vector<std::vector<double>> weights, int max_iteration) {
    if (base.empty()) throw ValidationError("fibre product needs at least one base map");
    if (fibres.size() != base.size() || weights.size() != base.size())
        throw ValidationError("one fibre family and weight list per base map is required");
    const int d = base.front().dim();
    double total = 0.0;
    for (std::size_t j = 0; j < base.size(); ++j) {
        if (base[j].dim() != d) throw ValidationError("base maps must share a dimension");
        if (!base[j].is_contraction()) throw ValidationError("base map " + std::to_string(j) + " is not a contraction");
        if (fibres[j].empty() || fibres[j].size() != weights[j].size())
            throw ValidationError("fibre family " + std::to_string(j) + " needs maps with matching weights");
        for (std::size_t l = 0; l < fibres[j].size(); ++l) {
            const double r = fibres[j][l].ratio;
            if (!(std::abs(r) > 0.0 && std::abs(r) < 1.0))
                throw ValidationError("fibre ratio must satisfy 0 < |r| < 1");
            if (!(weights[j][l] > 0.0)) throw ValidationError("fibre weights must be positive");
            total += weights[j][l];
        }
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("fibre product weights must sum to 1");

    // Non-trivial fibre: two maps with distinct fixed points.
    bool nontrivial = false;
    for (const auto& fam : fibres)
        for (std::size_t a = 0; a < fam.size() && !nontrivial; ++a)
            for (std::size_t b = a + 1; b < fam.size(); ++b)
                if (!same(fam[a].fixed_point(), fam[b].fixed_point())) nontrivial = true;
    if (!nontrivial) throw ValidationError("every fibre attractor is a singleton: all fibre maps share a fixed point");

    std::vector<std::string> labels;
    for (std::size_t j = 0; j < base.size(); ++j) labels.push_back(std::to_string(j));

    // Iterate: the n-fold system has base words J^n and, for each, all fibre
    // words over the matching families.
    std::vector<ContractionMap> cur_base = base;
    std::vector<std::vector<AffineMap>> cur_fib = fibres;
    std::vector<std::vector<double>> cur_w = weights;
    std::vector<std::string> cur_labels = labels;
    constexpr std::size_t word_budget = 1u << 20;
    for (int n = 1; n <= max_iteration; ++n) {
        Candidate best;
        for (std::size_t j = 0; j < cur_fib.size(); ++j) scan_family(static_cast<int>(j), cur_fib[j], cur_w[j], best);
        if (best.found) return FibreProduct(cur_base, cur_fib, cur_w, best.pair, n, cur_labels);
        if (n == max_iteration) break;
        // Extend every word of length n by one letter on the right.
        std::vector<ContractionMap> nb;
        std::vector<std::vector<AffineMap>> nf;
        std::vector<std::vector<double>> nw;
        std::vector<std::string> nl;
        std::size_t words = 0;
        for (std::size_t j = 0; j < cur_base.size(); ++j) {
            for (std::size_t k = 0; k < base.size(); ++k) {
                nb.push_back(cur_base[j].after(base[k]));
                nl.push_back(cur_labels[j] + std::to_string(k));
                std::vector<AffineMap> fam;
                std::vector<double> w;
                for (std::size_t a = 0; a < cur_fib[j].size(); ++a)
                    for (std::size_t b = 0; b < fibres[k].size(); ++b) {
                        fam.push_back(cur_fib[j][a].after(fibres[k][b]));
                        w.push_back(cur_w[j][a] * weights[k][b]);
                    }
                words += fam.size();
                nf.push_back(std::move(fam));
                nw.push_back(std::move(w));
            }
        }
        if (words > word_budget)
            throw BudgetExhausted("separated-pair search exceeded the word budget at iteration " +
                                      std::to_string(n + 1),
                                  n);
        cur_base = std::move(nb);
        cur_fib = std::move(nf);
        cur_w = std::move(nw);
        cur_labels = std::move(nl);
    }
    throw ValidationError("no separated pair found within " + std::to_string(max_iteration) + " iterations");
}

FibreProduct fibre_product_from_line(const Cifs& line) {
    if (!line.is_affine_line()) throw ValidationError("disintegration of a line system needs affine maps");
    if (line.tail_mass() > 0.0) throw ValidationError("disintegration needs a finite alphabet");
    std::vector<AffineMap> maps;
    for (const auto& s : line.symbols()) maps.push_back(s.map.as_affine());
    return build_fibre_product({ContractionMap::affine(0.5, 0.0)}, {maps}, {line.weights()});
}

}  // namespace ffl
