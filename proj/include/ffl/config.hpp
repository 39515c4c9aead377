#pragma once

/**
 * @file config.hpp
 * @brief JSON experiment configuration with strict key checking, canonical
 *        hashing, and the CSV/JSON formatting shared by every output file.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ffl/expr.hpp"
#include "ffl/ifs.hpp"
#include "ffl/pushforward.hpp"

namespace ffl {

struct ScanParams {
    double xi_min = 0.25;
    double xi_max = 64.0;
    std::size_t points = 512;
    bool log_spacing = false;
    double tol = 1e-8;

    std::vector<double> frequencies() const;
};

struct DisintegrateParams {
    int k = 2;
    std::size_t n_omega = 4000;
    std::vector<double> xis{0.5, 1.0, 2.0, 5.0, 10.0};
    double xi = 10.0;
    std::optional<double> alpha;
    std::size_t length = 64;
    std::size_t n_lo = 1, n_hi = 32;
    std::size_t samples = 10000;
    double tol = 1e-8;
};

struct EquidistParams {
    std::string sequence = "geometric";  // geometric | lacunary | arithmetic
    int base = 2;
    std::vector<std::uint64_t> terms;     // lacunary terms
    double lacunarity = 1.5;
    double gamma = 0.0;
    std::string psi = "(div 1 (mul 2 x))";
    std::size_t N = 1000;
    std::size_t seeds = 20;
    double epsilon = 1.0;
    int harmonics = 5;
    double band = 1.0;  // pass when |deviation| <= band
};

struct DecayParams {
    double band_base = 2.0;
    int j_lo = 2, j_hi = 10;
    std::size_t samples_per_band = 64;
    double tol = 1e-6;
    double epsilon = 0.1;
    std::vector<int> cover_j{4, 5, 6};
    double grid_step = 0.25;
    std::string family = "3^n";
    int n_lo = 0, n_hi = 10;
    bool pushforward = false;
};

struct ConjugateParams {
    std::size_t samples = 100000;
};

/// A parsed experiment description. Unknown keys anywhere are rejected.
class Config {
public:
    static Config parse(std::string_view json_text);
    static Config load(const std::string& path);

    /// Sorted-key compact JSON of the parsed document.
    const std::string& canonical() const { return canonical_; }
    /// FNV-1a 64 of the canonical form.
    std::uint64_t hash() const;
    std::string hash_hex() const;

    /// The measure's system (affine pairs, expressions, or a fibre product).
    Cifs system() const;
    bool has_fibre_product() const { return fibre_.has_value(); }
    /// The configured fibre product, or the line system as a fibre over x/2.
    FibreProduct fibre_product() const;
    std::optional<SmoothMapF> map() const;
    std::optional<Expr> inverse() const;

    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::uint64_t budget = 50'000'000;
    std::string output = "out";

    ScanParams scan;
    DisintegrateParams disintegrate;
    EquidistParams equidist;
    DecayParams decay;
    ConjugateParams conjugate;

private:
    static Config parse_document(std::string_view text);

    struct MapSpec {
        std::optional<std::pair<ParsedNumber, ParsedNumber>> affine;
        std::vector<std::string> expr;
    };
    struct FibreSpec {
        std::vector<MapSpec> base;
        std::vector<std::vector<std::pair<ParsedNumber, ParsedNumber>>> fibres;
        std::vector<std::vector<double>> weights;
        int max_iteration = 8;
    };
    std::vector<MapSpec> maps_;
    std::vector<double> weights_;
    std::optional<FibreSpec> fibre_;
    std::optional<std::string> map_text_;
    int map_dim_ = 1;
    std::optional<std::string> inverse_text_;
    std::string canonical_;
};

/// 17 significant digits, round-trippable.
std::string format_double(double v);

/// "# key=value" lines heading every output file.
std::string output_header(std::string_view command, const Config& config, std::uint64_t seed);

/// FNV-1a 64.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace ffl
