#include "ffl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>

#include "ffl/error.hpp"

namespace ffl {

using nlohmann::json;

namespace {

void expect_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError("unknown key '" + key + "' in " + where);
    }
}

ParsedNumber number(const json& v, const std::string& where) {
    if (v.is_string()) return parse_number(v.get<std::string>());
    if (v.is_number()) return parse_number(v.dump());
    throw ValidationError(where + " must be a number or a numeric string");
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + "." + key + " has the wrong type");
    }
}

void positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(what + " must be positive");
}

std::pair<ParsedNumber, ParsedNumber> affine_pair(const json& m, const std::string& where) {
    expect_keys(m, {"r", "t"}, where);
    if (!m.contains("r") || !m.contains("t")) throw ValidationError(where + " needs both r and t");
    return {number(m.at("r"), where + ".r"), number(m.at("t"), where + ".t")};
}

}  // namespace

std::vector<double> ScanParams::frequencies() const {
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double u = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        out[i] = log_spacing ? xi_min * std::pow(xi_max / xi_min, u) : xi_min + (xi_max - xi_min) * u;
    }
    return out;
}

Config Config::parse(std::string_view text) {
    try {
        return parse_document(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
}

Config Config::parse_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    expect_keys(doc,
                {"system", "map", "map_dim", "inverse", "seed", "threads", "budget", "output", "scan", "disintegrate",
                 "equidist", "decay", "conjugate"},
                "config");
    Config c;
    c.canonical_ = doc.dump();
    read(doc, "seed", c.seed, "config");
    read(doc, "threads", c.threads, "config");
    read(doc, "output", c.output, "config");
    if (doc.contains("budget")) {
        const double b = number(doc.at("budget"), "config.budget").value;
        if (!(b >= 1.0)) throw ValidationError("config.budget must be at least 1");
        c.budget = static_cast<std::uint64_t>(b);
    }
    if (doc.contains("map")) c.map_text_ = doc.at("map").get<std::string>();
    read(doc, "map_dim", c.map_dim_, "config");
    if (doc.contains("inverse")) c.inverse_text_ = doc.at("inverse").get<std::string>();

    if (!doc.contains("system")) throw ValidationError("config needs a system");
    const json& sys = doc.at("system");
    expect_keys(sys, {"maps", "weights", "fibre_product"}, "system");
    if (sys.contains("maps")) {
        const json& maps = sys.at("maps");
        if (!maps.is_array() || maps.empty()) throw ValidationError("system.maps must be a non-empty array");
        for (std::size_t i = 0; i < maps.size(); ++i) {
            const std::string where = "system.maps[" + std::to_string(i) + "]";
            MapSpec m;
            if (maps[i].contains("expr")) {
                expect_keys(maps[i], {"expr"}, where);
                const json& e = maps[i].at("expr");
                if (e.is_string()) m.expr.push_back(e.get<std::string>());
                else if (e.is_array()) m.expr = e.get<std::vector<std::string>>();
                else throw ValidationError(where + ".expr must be a string or array of strings");
            } else {
                m.affine = affine_pair(maps[i], where);
            }
            c.maps_.push_back(std::move(m));
        }
        read(sys, "weights", c.weights_, "system");
        if (c.weights_.empty()) c.weights_.assign(c.maps_.size(), 1.0 / static_cast<double>(c.maps_.size()));
        if (c.weights_.size() != c.maps_.size())
            throw ValidationError("system.weights must have one entry per map");
    }
    if (sys.contains("fibre_product")) {
        const json& fp = sys.at("fibre_product");
        expect_keys(fp, {"base", "fibres", "weights", "max_iteration"}, "system.fibre_product");
        FibreSpec f;
        for (std::size_t j = 0; j < fp.at("base").size(); ++j) {
            const json& b = fp.at("base")[j];
            const std::string where = "system.fibre_product.base[" + std::to_string(j) + "]";
            MapSpec m;
            if (b.contains("expr")) {
                expect_keys(b, {"expr"}, where);
                const json& e = b.at("expr");
                m.expr = e.is_array() ? e.get<std::vector<std::string>>() : std::vector<std::string>{e.get<std::string>()};
            } else {
                m.affine = affine_pair(b, where);
            }
            f.base.push_back(std::move(m));
        }
        for (std::size_t j = 0; j < fp.at("fibres").size(); ++j) {
            std::vector<std::pair<ParsedNumber, ParsedNumber>> fam;
            for (std::size_t l = 0; l < fp.at("fibres")[j].size(); ++l)
                fam.push_back(affine_pair(fp.at("fibres")[j][l], "system.fibre_product.fibres[" + std::to_string(j) +
                                                                      "][" + std::to_string(l) + "]"));
            f.fibres.push_back(std::move(fam));
        }
        read(fp, "weights", f.weights, "system.fibre_product");
        read(fp, "max_iteration", f.max_iteration, "system.fibre_product");
        if (f.weights.empty())
            throw ValidationError("system.fibre_product.weights is required");
        c.fibre_ = std::move(f);
    }
    if (c.maps_.empty() && !c.fibre_) throw ValidationError("system needs maps or a fibre_product");

    if (doc.contains("scan")) {
        const json& s = doc.at("scan");
        expect_keys(s, {"xi_min", "xi_max", "points", "log_spacing", "tol"}, "scan");
        read(s, "xi_min", c.scan.xi_min, "scan");
        read(s, "xi_max", c.scan.xi_max, "scan");
        read(s, "points", c.scan.points, "scan");
        read(s, "log_spacing", c.scan.log_spacing, "scan");
        read(s, "tol", c.scan.tol, "scan");
    }
    if (!(c.scan.xi_max > c.scan.xi_min) && !(c.scan.points == 1 && c.scan.xi_max == c.scan.xi_min))
        throw ValidationError("scan.xi_max must exceed scan.xi_min");
    if (c.scan.log_spacing) positive(c.scan.xi_min, "scan.xi_min with log spacing");
    if (c.scan.points < 1) throw ValidationError("scan.points must be at least 1");
    positive(c.scan.tol, "scan.tol");

    if (doc.contains("disintegrate")) {
        const json& d = doc.at("disintegrate");
        expect_keys(d, {"k", "n_omega", "xis", "xi", "alpha", "length", "n_lo", "n_hi", "samples", "tol"},
                    "disintegrate");
        auto& p = c.disintegrate;
        read(d, "k", p.k, "disintegrate");
        read(d, "n_omega", p.n_omega, "disintegrate");
        read(d, "xis", p.xis, "disintegrate");
        read(d, "xi", p.xi, "disintegrate");
        if (d.contains("alpha")) p.alpha = number(d.at("alpha"), "disintegrate.alpha").value;
        read(d, "length", p.length, "disintegrate");
        read(d, "n_lo", p.n_lo, "disintegrate");
        read(d, "n_hi", p.n_hi, "disintegrate");
        read(d, "samples", p.samples, "disintegrate");
        read(d, "tol", p.tol, "disintegrate");
    }
    if (c.disintegrate.k < 1) throw ValidationError("disintegrate.k must be at least 1");
    if (c.disintegrate.n_lo < 1 || c.disintegrate.n_hi < c.disintegrate.n_lo)
        throw ValidationError("disintegrate needs 1 <= n_lo <= n_hi");
    if (c.disintegrate.alpha) positive(*c.disintegrate.alpha, "disintegrate.alpha");
    positive(c.disintegrate.tol, "disintegrate.tol");

    if (doc.contains("equidist")) {
        const json& e = doc.at("equidist");
        expect_keys(e,
                    {"sequence", "base", "terms", "lacunarity", "gamma", "psi", "N", "seeds", "epsilon", "harmonics",
                     "band"},
                    "equidist");
        auto& p = c.equidist;
        read(e, "sequence", p.sequence, "equidist");
        read(e, "base", p.base, "equidist");
        read(e, "terms", p.terms, "equidist");
        read(e, "lacunarity", p.lacunarity, "equidist");
        read(e, "gamma", p.gamma, "equidist");
        read(e, "psi", p.psi, "equidist");
        read(e, "N", p.N, "equidist");
        read(e, "seeds", p.seeds, "equidist");
        read(e, "epsilon", p.epsilon, "equidist");
        read(e, "harmonics", p.harmonics, "equidist");
        read(e, "band", p.band, "equidist");
    }
    if (c.equidist.sequence != "geometric" && c.equidist.sequence != "lacunary" &&
        c.equidist.sequence != "arithmetic")
        throw ValidationError("equidist.sequence must be geometric, lacunary or arithmetic");
    if (!(c.equidist.gamma >= 0.0 && c.equidist.gamma <= 1.0)) throw ValidationError("equidist.gamma must lie in [0,1]");
    if (c.equidist.N < 1 || c.equidist.seeds < 1) throw ValidationError("equidist.N and equidist.seeds must be positive");
    positive(c.equidist.epsilon, "equidist.epsilon");

    if (doc.contains("decay")) {
        const json& d = doc.at("decay");
        expect_keys(d,
                    {"band_base", "j_lo", "j_hi", "samples_per_band", "tol", "epsilon", "cover_j", "grid_step",
                     "family", "n_lo", "n_hi", "pushforward"},
                    "decay");
        auto& p = c.decay;
        read(d, "band_base", p.band_base, "decay");
        read(d, "j_lo", p.j_lo, "decay");
        read(d, "j_hi", p.j_hi, "decay");
        read(d, "samples_per_band", p.samples_per_band, "decay");
        read(d, "tol", p.tol, "decay");
        read(d, "epsilon", p.epsilon, "decay");
        read(d, "cover_j", p.cover_j, "decay");
        read(d, "grid_step", p.grid_step, "decay");
        read(d, "family", p.family, "decay");
        read(d, "n_lo", p.n_lo, "decay");
        read(d, "n_hi", p.n_hi, "decay");
        read(d, "pushforward", p.pushforward, "decay");
    }
    positive(c.decay.tol, "decay.tol");
    if (!(c.decay.band_base > 1.0)) throw ValidationError("decay.band_base must exceed 1");

    if (doc.contains("conjugate")) {
        const json& d = doc.at("conjugate");
        expect_keys(d, {"samples"}, "conjugate");
        read(d, "samples", c.conjugate.samples, "conjugate");
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical_); }

std::string Config::hash_hex() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

namespace {

ContractionMap build_map(const std::vector<std::string>& expr, int& dim) {
    std::vector<Expr> comps;
    for (const auto& e : expr) comps.push_back(Expr::parse(e));
    dim = static_cast<int>(comps.size());
    return ContractionMap::smooth(std::move(comps));
}

}  // namespace

Cifs Config::system() const {
    if (maps_.empty()) return fibre_product().as_cifs();
    bool all_affine = true;
    for (const auto& m : maps_) all_affine = all_affine && m.affine.has_value();
    if (all_affine) {
        std::vector<AffineMap> am;
        for (const auto& m : maps_) am.push_back(make_affine(m.affine->first, m.affine->second));
        return make_affine_cifs(am, weights_);
    }
    std::vector<Symbol> symbols;
    for (std::size_t i = 0; i < maps_.size(); ++i) {
        const auto& m = maps_[i];
        int dim = 1;
        auto map = m.affine ? ContractionMap::affine(make_affine(m.affine->first, m.affine->second))
                            : build_map(m.expr, dim);
        symbols.push_back({std::to_string(i), map, weights_[i], std::nullopt});
    }
    return Cifs(std::move(symbols));
}

FibreProduct Config::fibre_product() const {
    if (!fibre_) return fibre_product_from_line(system());
    std::vector<ContractionMap> base;
    for (const auto& m : fibre_->base) {
        int dim = 1;
        base.push_back(m.affine ? ContractionMap::affine(make_affine(m.affine->first, m.affine->second))
                                : build_map(m.expr, dim));
    }
    std::vector<std::vector<AffineMap>> fibres;
    for (const auto& fam : fibre_->fibres) {
        std::vector<AffineMap> f;
        for (const auto& [r, t] : fam) f.push_back(make_affine(r, t));
        fibres.push_back(std::move(f));
    }
    return build_fibre_product(std::move(base), std::move(fibres), fibre_->weights, fibre_->max_iteration);
}

std::optional<SmoothMapF> Config::map() const {
    if (!map_text_) return std::nullopt;
    return SmoothMapF::parse(*map_text_, map_dim_);
}

std::optional<Expr> Config::inverse() const {
    if (!inverse_text_) return std::nullopt;
    return Expr::parse(*inverse_text_);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string output_header(std::string_view command, const Config& config, std::uint64_t seed) {
    std::string h = "# command=" + std::string(command) + "\n";
    h += "# config_hash=fnv1a64:" + config.hash_hex() + "\n";
    h += "# seed=" + std::to_string(seed) + "\n";
    return h;
}

}  // namespace ffl
