#pragma once

/**
 * @file ifs.hpp
 * @brief Contractions, (countable) iterated function systems, fibre products and words.
 *
 * A countable alphabet is represented by a finite truncation plus the
 * probability mass of the omitted symbols (`tail_mass`). Every downstream
 * error bound adds that mass explicitly.
 */

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffl/expr.hpp"
#include "ffl/interval.hpp"
#include "ffl/rational.hpp"

namespace ffl {

/// x -> ratio * x + translate on the line. Exact rationals ride along when known.
struct AffineMap {
    double ratio = 0.5;
    double translate = 0.0;
    std::optional<Rational> exact_ratio;
    std::optional<Rational> exact_translate;

    double operator()(double x) const { return ratio * x + translate; }
    double fixed_point() const { return translate / (1.0 - ratio); }
    /// Image of [0, 1].
    Interval unit_image() const { return Interval::hull(translate, translate + ratio); }
    /// this ∘ inner
    AffineMap after(const AffineMap& inner) const;
};

AffineMap make_affine(const ParsedNumber& ratio, const ParsedNumber& translate);

class ContractionMap {
public:
    enum class Kind { Affine, Smooth, Product };

    /// Affine similarity of the line; requires 0 < |r| < 1.
    static ContractionMap affine(double ratio, double translate);
    static ContractionMap affine(const AffineMap& map);

    /// Smooth self-map of [0,1]^d given by one expression per output coordinate.
    /// The contraction bound is the grid maximum of the Jacobian row-sum norm
    /// (resolution 2^-12 per axis, capped at 2^20 grid points) plus
    /// `derivative_lipschitz * h / 2`.
    static ContractionMap smooth(std::vector<Expr> components, double derivative_lipschitz = 0.0,
                                 bool require_contraction = true);

    /// (x, y) -> (base(x), fibre(y)) on [0,1]^{d+1}.
    static ContractionMap product(const ContractionMap& base, const AffineMap& fibre);

    static ContractionMap identity(int dim);

    Kind kind() const;
    int dim() const;

    void apply(std::span<const double> in, std::span<double> out) const;
    double apply(double x) const;

    /// Enclosure of the image of a box.
    Box image(const Box& box) const;

    /// Upper bound for the Lipschitz constant in the sup metric.
    double lipschitz() const;
    bool is_contraction() const { return lipschitz() < 1.0; }

    const AffineMap& as_affine() const;
    const ContractionMap& base() const;
    const AffineMap& fibre() const;
    const std::vector<Expr>& components() const;

    /// Expression form of every output coordinate, regardless of kind.
    std::vector<Expr> expressions() const;

    /// this ∘ inner.
    ContractionMap after(const ContractionMap& inner) const;

private:
    struct Impl;
    explicit ContractionMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

struct Symbol {
    std::string id;
    ContractionMap map;
    double weight = 0.0;
    std::optional<Rational> exact_weight;
};

/// A finite or truncated-countable IFS with probability weights.
class Cifs {
public:
    struct Options {
        /// Probability of symbols omitted by truncation.
        double tail_mass = 0.0;
        /// Lower bound for |r| over the omitted symbols (enables tail_check).
        std::optional<double> tail_ratio_floor;
        /// When false, maps need not verify as contractions; sampling then
        /// relies on `convergence_rates` and `sampling_prefactor`.
        bool require_contraction = true;
        std::vector<double> convergence_rates;
        double sampling_prefactor = 1.0;
    };

    Cifs(std::vector<Symbol> symbols, Options options);
    explicit Cifs(std::vector<Symbol> symbols) : Cifs(std::move(symbols), Options{}) {}

    std::size_t size() const { return symbols_.size(); }
    int dim() const { return symbols_.front().map.dim(); }
    const Symbol& symbol(std::size_t i) const { return symbols_.at(i); }
    const std::vector<Symbol>& symbols() const { return symbols_; }
    std::optional<std::size_t> index_of(std::string_view id) const;
    std::vector<double> weights() const;

    double tail_mass() const { return options_.tail_mass; }
    std::optional<double> tail_ratio_floor() const { return options_.tail_ratio_floor; }

    /// sup over symbols of the contraction bound.
    double contraction_bound() const;
    /// Per-symbol rate used to pick sampling depth, and its prefactor.
    double convergence_rate(std::size_t i) const;
    double sampling_prefactor() const { return options_.sampling_prefactor; }

    bool is_affine_line() const;
    /// Ratios / translates of an affine line system.
    std::vector<double> ratios() const;
    std::vector<double> translates() const;

private:
    std::vector<Symbol> symbols_;
    Options options_;
};

/// Builds a 1-D affine system from (ratio, translate) pairs and weights.
Cifs make_affine_cifs(std::span<const AffineMap> maps, std::span<const double> weights, double tail_mass = 0.0);

/// A word over a system's alphabet, as symbol indices.
struct Word {
    std::vector<int> letters;

    std::size_t size() const { return letters.size(); }
    bool empty() const { return letters.empty(); }
    Word then(const Word& other) const;
    bool operator==(const Word&) const = default;
    auto operator<=>(const Word&) const = default;

    /// Resolves symbol ids; rejects unknown ids with their position.
    static Word from_ids(const Cifs& cifs, std::span<const std::string> ids);
};

/// Product of member ratios (affine line systems) or contraction bounds.
double word_ratio(const Cifs& cifs, const Word& w);
double word_weight(const Cifs& cifs, const Word& w);

/// phi_{a_1} ∘ ... ∘ phi_{a_n}. The empty word yields the identity, which is
/// not a contraction.
ContractionMap compose(const Cifs& cifs, const Word& word);

struct TailCheck {
    double value = 0.0;       // sum over represented symbols
    double tail_bound = 0.0;  // bound for the omitted symbols
    bool finite = true;
};

/// sum_a p_a |r_a|^{-tau}.
TailCheck tail_check(const Cifs& cifs, double tau);

/// Sum_a p_a log(1/|r_a|) over the ratios of an affine line system.
double lyapunov(const Cifs& cifs);

// ---------------------------------------------------------------------------
// Fibre products

/// Symbol (j, l): base map j paired with fibre map l of family j.
struct FibreSymbol {
    int base = 0;
    int fibre = 0;
    bool operator==(const FibreSymbol&) const = default;
};

/// Two fibre maps of one family with equal ratio and weight and disjoint
/// images of [0,1].
struct SeparatedPair {
    int base = 0;      // j*
    int first = 0;     // l1
    int second = 0;    // l2
    double ratio = 0;  // r*
    double weight = 0; // p*
    double gap = 0;    // c = |t_{l2} - t_{l1}|
};

class FibreProduct {
public:
    FibreProduct(std::vector<ContractionMap> base, std::vector<std::vector<AffineMap>> fibres,
                 std::vector<std::vector<double>> weights, SeparatedPair pair, int iteration,
                 std::vector<std::string> base_labels);

    int dim() const { return base_.front().dim() + 1; }
    const std::vector<ContractionMap>& base_maps() const { return base_; }
    const std::vector<std::vector<AffineMap>>& fibre_maps() const { return fibres_; }
    const std::vector<std::vector<double>>& weights() const { return weights_; }
    const SeparatedPair& separated_pair() const { return pair_; }
    /// Composition depth the system was iterated to (1 = original maps).
    int iteration() const { return iteration_; }
    /// Label of each base map as a word over the original base alphabet.
    const std::vector<std::string>& base_labels() const { return base_labels_; }

    /// Flattened alphabet in (j, l) order.
    const std::vector<FibreSymbol>& alphabet() const { return alphabet_; }
    double weight(const FibreSymbol& s) const { return weights_[s.base][s.fibre]; }
    const AffineMap& fibre_map(const FibreSymbol& s) const { return fibres_[s.base][s.fibre]; }
    bool is_special(const FibreSymbol& s) const;

    /// The product system on [0,1]^{d+1}.
    Cifs as_cifs() const;
    /// The last-coordinate marginal's governing line system is not in general an
    /// IFS; this returns the fibre ratios/weights used by the Lyapunov exponent.
    double lyapunov() const;

private:
    std::vector<ContractionMap> base_;
    std::vector<std::vector<AffineMap>> fibres_;
    std::vector<std::vector<double>> weights_;
    SeparatedPair pair_;
    int iteration_;
    std::vector<std::string> base_labels_;
    std::vector<FibreSymbol> alphabet_;
};

/// Validates the structure and locates a separated pair, iterating the system
/// up to `max_iteration` times when no pair of maps has disjoint images.
FibreProduct build_fibre_product(std::vector<ContractionMap> base, std::vector<std::vector<AffineMap>> fibres,
                                 std::vector<std::vector<double>> weights, int max_iteration = 8);

/// Realizes a line system as the fibre over the single base map x/2.
FibreProduct fibre_product_from_line(const Cifs& line);

/// Attractor hull of an affine line system (fixed point of the hull map).
Interval attractor_hull(const Cifs& cifs);

}  // namespace ffl
