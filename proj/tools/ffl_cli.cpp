// Config-driven experiment runner. Every output file starts with a "#" header
// carrying the config hash and seed; reruns with the same inputs are byte-identical.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ffl/config.hpp"
#include "ffl/decay.hpp"
#include "ffl/disintegration.hpp"
#include "ffl/equidist.hpp"
#include "ffl/error.hpp"
#include "ffl/measure.hpp"
#include "ffl/parallel.hpp"
#include "ffl/precise.hpp"
#include "ffl/pushforward.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ffl;

namespace {

struct Run {
    Config config;
    std::uint64_t seed = 1;
    std::uint64_t budget = kDefaultWordBudget;
    fs::path out;
    std::string command;

    fs::path file(const std::string& name) const { return out / name; }

    void write(const std::string& name, const std::string& body) const {
        fs::create_directories(out);
        std::ofstream f(file(name), std::ios::binary);
        if (!f) throw ValidationError("cannot write " + file(name).string());
        f << body;
    }

    std::string header() const { return output_header(command, config, seed); }

    /// JSON outputs carry the same provenance as CSV headers.
    void write_json(const std::string& name, ordered_json body) const {
        ordered_json doc;
        doc["command"] = command;
        doc["config_hash"] = "fnv1a64:" + config.hash_hex();
        doc["seed"] = seed;
        for (auto& [k, v] : body.items()) doc[k] = v;
        write(name, doc.dump(2) + "\n");
    }
};

std::string fmt(double v) { return format_double(v); }

ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    return fmt(v);
}

Evaluator system_evaluator(const Cifs& cifs, double tol, std::uint64_t budget) {
    if (cifs.is_affine_line()) return measure_evaluator(cifs, tol, budget);
    if (cifs.dim() == 1) return pushforward_evaluator(SmoothMapF::parse("x"), cifs, tol, budget);
    throw ValidationError("a scalar transform needs a one-dimensional system; use pushforward-scan with a map");
}

Evaluator pushforward_from(const Run& run, double tol) {
    auto F = run.config.map();
    if (!F) throw ValidationError("config has no map for the pushforward");
    return pushforward_evaluator(*F, run.config.system(), tol, run.budget);
}

std::string scan_csv(const Run& run, const Evaluator& eval, const std::vector<double>& xis) {
    std::vector<FourierValue> vals(xis.size());
    parallel_for(xis.size(), [&](std::size_t i) { vals[i] = eval(xis[i]); });
    std::string out = run.header() + "xi,re,im,abs,err,err_kind\n";
    for (const auto& v : vals) {
        out += fmt(v.xi) + "," + fmt(v.value.real()) + "," + fmt(v.value.imag()) + "," + fmt(std::abs(v.value)) + "," +
               fmt(v.error) + "," + to_string(v.kind) + (v.budget_exhausted ? "-relaxed" : "") + "\n";
    }
    return out;
}

// --------------------------------------------------------------------------- scans

void fourier_scan(const Run& run) {
    const auto& s = run.config.scan;
    run.write("fourier_scan.csv", scan_csv(run, system_evaluator(run.config.system(), s.tol, run.budget), s.frequencies()));
}

void pushforward_scan(const Run& run) {
    const auto& s = run.config.scan;
    run.write("pushforward_scan.csv", scan_csv(run, pushforward_from(run, s.tol), s.frequencies()));
}

// --------------------------------------------------------------------------- disintegration

ordered_json word_json(const Word& w) { return w.letters; }

void disintegrate(const Run& run, const std::string& what) {
    const auto& p = run.config.disintegrate;
    const auto fp = run.config.fibre_product();
    if (what == "consistency") {
        const auto rep = disintegration_consistency(fp, p.k, p.xis, p.n_omega, run.seed, p.tol);
        std::string csv = run.header() + "xi,mean_re,mean_im,stderr,ref_re,ref_im,ref_err,trunc_err,z,pass\n";
        for (const auto& r : rep.rows)
            csv += fmt(r.xi) + "," + fmt(r.mean.real()) + "," + fmt(r.mean.imag()) + "," + fmt(r.standard_error) +
                   "," + fmt(r.reference.real()) + "," + fmt(r.reference.imag()) + "," + fmt(r.reference_error) + "," +
                   fmt(r.truncation_error) + "," + fmt(r.z_score) + "," + (r.pass ? "1" : "0") + "\n";
        run.write("consistency.csv", csv);
        run.write_json("consistency.json", {{"k", p.k}, {"n_omega", p.n_omega}, {"pass", rep.pass()}});
        return;
    }
    const auto table = build_classes(fp, p.k);
    if (what == "classes") {
        ordered_json classes = ordered_json::array();
        double total = 0.0;
        for (const auto& c : table.classes) {
            total += c.q;
            classes.push_back({{"representative", word_json(c.representative)},
                               {"special_slots", c.special_slots},
                               {"size", c.size},
                               {"ratio", c.ratio},
                               {"q", c.q},
                               {"pair_gap", c.pair_gap()}});
        }
        run.write_json("classes.json", {{"k", p.k},
                                        {"iteration", fp.iteration()},
                                        {"p_star", table.p_star},
                                        {"gap", table.gap},
                                        {"lyapunov", table.lyapunov},
                                        {"class_count", table.classes.size()},
                                        {"total_q", total},
                                        {"classes", classes}});
        return;
    }
    const auto omega = sample_omega(table, p.length, run.seed);
    if (what == "sample") {
        const auto ratios = cumulative_ratios(table, omega);
        const auto base = omega_base_point(table, omega);
        const auto pts = sample_mu_omega(table, omega, p.samples, run.seed);
        std::string csv = run.header() + "index,y\n";
        for (std::size_t i = 0; i < pts.size(); ++i) csv += std::to_string(i) + "," + fmt(pts[i]) + "\n";
        run.write("mu_omega_samples.csv", csv);
        ordered_json r = ordered_json::array();
        for (double v : ratios) r.push_back(num(v));
        run.write_json("omega.json", {{"k", p.k}, {"classes", omega.classes}, {"cumulative_ratios", r}, {"base_point", base}});
        return;
    }
    const auto calib = calibrate_alpha(table, run.seed);
    const double alpha = p.alpha.value_or(calib.alpha);
    const auto params = make_ld_params(table, alpha, p.n_lo);
    if (what == "membership") {
        const auto rep = check_omega_membership(table, omega, params, p.n_lo, p.n_hi);
        ordered_json rows = ordered_json::array();
        for (const auto& r : rep.rows)
            rows.push_back({{"N", r.n}, {"omega1", r.omega1}, {"omega2", r.omega2}, {"omega3", r.omega3}, {"omega4", r.omega4}});
        run.write_json("membership.json", {{"k", p.k},
                                           {"alpha", alpha},
                                           {"alpha_calibrated", calib.alpha},
                                           {"small_class_mass", calib.small_class_mass},
                                           {"small_class_mass_mc", calib.monte_carlo_mass},
                                           {"omega_star", rep.omega_star()},
                                           {"rows", rows}});
        return;
    }
    if (what == "ek") {
        const auto d = ek_diagnostics(table, omega, p.xi, params);
        ordered_json levels = ordered_json::array();
        for (const auto& l : d.levels)
            levels.push_back({{"i", l.index}, {"value", num(l.value)}, {"p", num(l.p)}, {"eps", num(l.eps)}, {"bad", l.bad}});
        run.write_json("ek.json", {{"xi", p.xi},
                                   {"alpha", alpha},
                                   {"T", d.T},
                                   {"N_omega", d.n_omega},
                                   {"eps_star", d.eps_star},
                                   {"bad_count", d.bad.size()},
                                   {"levels", levels},
                                   {"warnings", d.warnings}});
        return;
    }
    throw ValidationError("unknown disintegrate mode " + what);
}

// --------------------------------------------------------------------------- equidistribution

Sequence make_sequence(const EquidistParams& p) {
    if (p.sequence == "geometric") return Sequence::geometric(p.base);
    if (p.sequence == "lacunary") return Sequence::lacunary(p.terms, p.lacunarity);
    return Sequence::arithmetic(p.N);
}

void equidist(const Run& run, const std::string& what) {
    const auto& p = run.config.equidist;
    const Cifs cifs = run.config.system();
    const auto F = run.config.map();
    const Sequence seq = make_sequence(p);
    const std::size_t bits =
        what == "digits" ? static_cast<std::size_t>(std::ceil((p.N + 4) * std::log2(p.base))) + 8 : bits_needed(seq, p.N);
    std::vector<PreciseReal> xs;
    for (std::size_t s = 0; s < p.seeds; ++s) {
        CounterRng rng(run.seed, s);
        auto y = sample_precise(cifs, F ? bits + 64 : bits, rng);
        xs.push_back(F ? apply_precise(F->expr(), y, bits) : y);
    }
    if (what == "count") {
        const EquidistSpec spec{seq, p.gamma, Expr::parse(p.psi), p.N};
        std::vector<CountResult> res(xs.size());
        parallel_for(xs.size(), [&](std::size_t i) { res[i] = count_hits(xs[i], spec, p.epsilon); });
        std::string csv = run.header() + "seed,x,N,count,two_sigma,deviation\n";
        std::size_t inside = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            csv += std::to_string(i) + "," + fmt(xs[i].to_double()) + "," + std::to_string(res[i].N) + "," +
                   std::to_string(res[i].count) + "," + fmt(res[i].two_sigma) + "," + fmt(res[i].deviation) + "\n";
            if (std::abs(res[i].deviation) <= p.band) ++inside;
        }
        run.write("equidist_count.csv", csv);
        run.write_json("equidist_summary.json",
                       {{"mode", "count"},
                        {"sequence", p.sequence},
                        {"N", p.N},
                        {"samples", res.size()},
                        {"epsilon", p.epsilon},
                        {"sigma", res.front().sigma},
                        {"band", p.band},
                        {"pass_fraction", static_cast<double>(inside) / res.size()}});
        return;
    }
    if (what == "weyl") {
        std::vector<std::vector<double>> sums(xs.size());
        parallel_for(xs.size(), [&](std::size_t i) { sums[i] = weyl_sums(xs[i], seq, p.N, p.harmonics); });
        std::string csv = run.header() + "seed,x,h,abs_sum\n";
        double worst = 0.0;
        for (std::size_t i = 0; i < sums.size(); ++i)
            for (std::size_t h = 0; h < sums[i].size(); ++h) {
                csv += std::to_string(i) + "," + fmt(xs[i].to_double()) + "," + std::to_string(h + 1) + "," +
                       fmt(sums[i][h]) + "\n";
                worst = std::max(worst, sums[i][h]);
            }
        run.write("equidist_weyl.csv", csv);
        run.write_json("equidist_summary.json",
                       {{"mode", "weyl"}, {"N", p.N}, {"harmonics", p.harmonics}, {"samples", xs.size()}, {"max_abs_sum", worst}});
        return;
    }
    if (what == "digits") {
        std::string csv = run.header() + "seed,x,digit,count\n";
        ordered_json chi = ordered_json::array();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto f = digit_freq(xs[i], p.base, p.N);
            for (int d = 0; d < p.base; ++d)
                csv += std::to_string(i) + "," + fmt(xs[i].to_double()) + "," + std::to_string(d) + "," +
                       std::to_string(f.histogram[d]) + "\n";
            chi.push_back(f.chi_square);
        }
        run.write("equidist_digits.csv", csv);
        run.write_json("equidist_summary.json", {{"mode", "digits"}, {"base", p.base}, {"N", p.N}, {"chi_square", chi}});
        return;
    }
    throw ValidationError("unknown equidist mode " + what);
}

// --------------------------------------------------------------------------- decay

std::vector<double> parse_family(const std::string& text, int n_lo, int n_hi) {
    const auto caret = text.find('^');
    if (caret != std::string::npos) {
        if (text.substr(caret + 1) != "n") throw ValidationError("family must look like b^n or a comma list");
        return geometric_family(parse_number(text.substr(0, caret)).value, n_lo, n_hi);
    }
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_number(item).value);
    if (out.empty()) throw ValidationError("empty frequency family");
    return out;
}

void decay(const Run& run, const std::string& what, const std::optional<std::string>& family) {
    const auto& p = run.config.decay;
    const Evaluator eval = p.pushforward ? pushforward_from(run, p.tol)
                                         : system_evaluator(run.config.system(), p.tol, run.budget);
    ordered_json doc;
    doc["mode"] = what;
    doc["bands"] = ordered_json::array();
    doc["eta_hat"] = nullptr;
    doc["eta_se"] = nullptr;
    doc["cover_counts"] = ordered_json::array();
    std::vector<Series> series;
    if (what == "bands" || what == "fit") {
        const auto bands = band_maxima(eval, p.band_base, p.j_lo, p.j_hi, p.samples_per_band, run.seed);
        Series s{"band maxima", {}, {}};
        for (const auto& b : bands) {
            doc["bands"].push_back({{"j", b.j},
                                    {"lo", b.lo},
                                    {"hi", b.hi},
                                    {"max", b.max_abs},
                                    {"argmax", b.argmax},
                                    {"max_error", b.max_error},
                                    {"samples", b.samples},
                                    {"excluded", b.excluded}});
            s.x.push_back(b.lo);
            s.y.push_back(b.max_abs);
        }
        series.push_back(s);
        if (what == "fit") {
            const auto f = fit_eta(bands);
            doc["eta_hat"] = f.eta;
            doc["eta_se"] = f.eta_se;
            doc["C_hat"] = f.C;
            doc["r2"] = f.r2;
            doc["excluded_bands"] = f.excluded_bands;
            Series fitted{"fit C T^-eta", {}, {}};
            for (const auto& b : bands) {
                fitted.x.push_back(b.lo);
                fitted.y.push_back(f.C * std::pow(b.lo, -f.eta));
            }
            series.push_back(fitted);
        }
    } else if (what == "sparse") {
        std::vector<SparseCover> covers;
        Series s{"cover count", {}, {}};
        for (int j : p.cover_j) {
            covers.push_back(sparse_cover(eval, std::pow(p.band_base, j), p.epsilon, p.grid_step));
            doc["cover_counts"].push_back({{"j", j}, {"T", covers.back().T}, {"count", covers.back().count}});
            s.x.push_back(covers.back().T);
            s.y.push_back(static_cast<double>(covers.back().count));
        }
        series.push_back(s);
        if (covers.size() >= 2) {
            const auto g = growth_exponent(covers);
            doc["growth_exponent"] = g.exponent;
            doc["growth_se"] = g.se;
        }
        doc["epsilon"] = p.epsilon;
    } else if (what == "probe") {
        const auto xis = parse_family(family.value_or(p.family), p.n_lo, p.n_hi);
        const auto vals = rajchman_probe(eval, xis);
        std::string csv = run.header() + "xi,re,im,abs,err,err_kind\n";
        Series s{"|transform| along family", {}, {}};
        for (const auto& v : vals) {
            csv += fmt(v.xi) + "," + fmt(v.value.real()) + "," + fmt(v.value.imag()) + "," + fmt(std::abs(v.value)) +
                   "," + fmt(v.error) + "," + to_string(v.kind) + "\n";
            s.x.push_back(v.xi);
            s.y.push_back(std::abs(v.value));
        }
        series.push_back(s);
        run.write("probe.csv", csv);
    } else {
        throw ValidationError("unknown decay mode " + what);
    }
    run.write_json("decay.json", doc);
    run.write("decay.svg", loglog_svg("decay " + what, series));
}

// --------------------------------------------------------------------------- conjugacy, report, verify

void conjugate(const Run& run) {
    const auto F = run.config.map();
    const auto inv = run.config.inverse();
    if (!F || !inv) throw ValidationError("conjugate needs both map and inverse in the config");
    const auto res = conjugate_ifs(run.config.system(), *F, *inv, run.config.conjugate.samples, run.seed);
    ordered_json maps = ordered_json::array();
    for (const auto& s : res.system.symbols()) {
        if (s.map.kind() == ContractionMap::Kind::Affine)
            maps.push_back({{"r", s.map.as_affine().ratio}, {"t", s.map.as_affine().translate}, {"weight", s.weight}});
        else
            maps.push_back({{"expr", s.map.expressions().front().to_string()}, {"weight", s.weight}});
    }
    run.write_json("conjugate.json",
                   {{"maps", maps}, {"ks_distance", res.ks_distance}, {"samples", res.samples}, {"ks_pass", res.ks_distance <= 0.02}});
}

struct ScanFile {
    std::string command;
    std::vector<std::vector<double>> rows;  // xi, re, im, abs, err
};

ScanFile read_scan(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    ScanFile f;
    bool header_seen = false;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("# command=", 0) == 0) f.command = line.substr(10);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("xi,re,im,abs,err", 0) != 0) return {};
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',') && row.size() < 5;) row.push_back(std::stod(cell));
        f.rows.push_back(row);
    }
    return f;
}

void report(const Run& run) {
    if (!fs::is_directory(run.out)) throw ValidationError("output directory " + run.out.string() + " does not exist");
    std::vector<fs::path> csvs;
    for (const auto& e : fs::directory_iterator(run.out))
        if (e.path().extension() == ".csv") csvs.push_back(e.path());
    std::sort(csvs.begin(), csvs.end());
    ordered_json made = ordered_json::array();
    for (const auto& path : csvs) {
        const auto scan = read_scan(path);
        if (scan.rows.empty()) continue;
        Series s{"|transform|", {}, {}}, err{"error bound", {}, {}};
        for (const auto& r : scan.rows) {
            s.x.push_back(std::abs(r[0]));
            s.y.push_back(r[3]);
            err.x.push_back(std::abs(r[0]));
            err.y.push_back(r[4]);
        }
        const std::string name = path.stem().string() + ".svg";
        run.write(name, loglog_svg(path.stem().string(), {s, err}));
        made.push_back(name);
    }
    run.write_json("report.json", {{"plots", made}});
}

int verify(const Run& run, const std::optional<std::string>& input) {
    const fs::path path = input ? fs::path(*input) : run.file("fourier_scan.csv");
    const auto scan = read_scan(path);
    if (scan.rows.empty()) throw ValidationError(path.string() + " holds no scan rows");
    Evaluator eval;
    if (scan.command == "pushforward-scan") eval = pushforward_from(run, run.config.scan.tol);
    else eval = system_evaluator(run.config.system(), run.config.scan.tol, run.budget);
    // Re-evaluate 1% of the rows (at least one), evenly spread.
    const std::size_t stride = std::max<std::size_t>(1, scan.rows.size() / std::max<std::size_t>(1, scan.rows.size() / 100));
    std::size_t checked = 0, failed = 0;
    ordered_json bad = ordered_json::array();
    for (std::size_t i = 0; i < scan.rows.size(); i += stride) {
        const auto& r = scan.rows[i];
        const auto v = eval(r[0]);
        const double gap = std::abs(v.value - Complex(r[1], r[2]));
        ++checked;
        if (!(gap <= r[4] + v.error + 1e-12)) {
            ++failed;
            bad.push_back({{"xi", r[0]}, {"gap", gap}, {"stored_err", r[4]}, {"fresh_err", v.error}});
        }
    }
    run.write_json("verify.json", {{"input", path.filename().string()}, {"checked", checked}, {"failed", failed}, {"mismatches", bad}});
    std::cout << "verified " << checked << " rows, " << failed << " outside their error bounds\n";
    return failed == 0 ? 0 : 2;
}

void diagnostic(const std::string& kind, const std::string& message, std::optional<double> achieved = std::nullopt) {
    ordered_json d{{"error", kind}, {"message", message}};
    if (achieved) d["achieved"] = num(*achieved);
    std::cerr << d.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier decay and equidistribution experiments for fractal measures", "ffl"};
    app.require_subcommand(1);
    std::optional<std::string> config_path, out_dir;
    std::optional<std::uint64_t> seed, budget;
    std::optional<unsigned> threads;
    app.add_option("--config", config_path, "experiment config (JSON)")->envname("FFL_CONFIG");
    app.add_option("--out", out_dir, "output directory")->envname("FFL_OUT");
    app.add_option("--seed", seed, "master seed")->envname("FFL_SEED");
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->envname("FFL_THREADS");
    app.add_option("--budget", budget, "word budget per evaluation")->envname("FFL_BUDGET");
    app.fallthrough();

    auto* scan = app.add_subcommand("fourier-scan", "transform of the measure over a frequency grid");
    auto* push = app.add_subcommand("pushforward-scan", "transform of F mu over a frequency grid");
    auto* dis = app.add_subcommand("disintegrate", "random measures mu_omega of a fibre product");
    dis->require_subcommand(1);
    for (const char* m : {"classes", "sample", "consistency", "ek", "membership"}) dis->add_subcommand(m);
    auto* eq = app.add_subcommand("equidist", "counting functions, Weyl sums and digits of sampled points");
    eq->require_subcommand(1);
    for (const char* m : {"count", "weyl", "digits"}) eq->add_subcommand(m);
    auto* dec = app.add_subcommand("decay", "band maxima, exponent fits, sparse covers and probes");
    dec->require_subcommand(1);
    std::optional<std::string> family;
    for (const char* m : {"bands", "fit", "sparse", "probe"}) {
        auto* sub = dec->add_subcommand(m);
        if (std::string(m) == "probe") sub->add_option("--family", family, "b^n or a comma-separated list");
    }
    auto* conj = app.add_subcommand("conjugate", "conjugate an affine system by a diffeomorphism F");
    auto* rep = app.add_subcommand("report", "one SVG per scan CSV in the output directory");
    auto* ver = app.add_subcommand("verify", "re-evaluate 1% of a scan's rows against their error bounds");
    std::optional<std::string> verify_input;
    ver->add_option("--input", verify_input, "scan CSV (default: <out>/fourier_scan.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path) throw ValidationError("--config is required");
        Run run;
        run.config = Config::load(*config_path);
        run.seed = seed.value_or(run.config.seed);
        run.budget = budget.value_or(run.config.budget);
        if (run.budget == 0) throw ValidationError("--budget must be at least 1");
        run.out = out_dir.value_or(run.config.output);
        set_thread_count(threads.value_or(run.config.threads));

        auto* sub = app.get_subcommands().front();
        run.command = sub->get_name();
        auto mode = [&] { return sub->get_subcommands().front()->get_name(); };
        if (sub == scan) fourier_scan(run);
        else if (sub == push) pushforward_scan(run);
        else if (sub == dis) run.command += " " + mode(), disintegrate(run, mode());
        else if (sub == eq) run.command += " " + mode(), equidist(run, mode());
        else if (sub == dec) run.command += " " + mode(), decay(run, mode(), family);
        else if (sub == conj) conjugate(run);
        else if (sub == rep) report(run);
        else if (sub == ver) return verify(run, verify_input);
        return 0;
    } catch (const BudgetExhausted& e) {
        diagnostic("budget", e.what(), e.achieved());
        return 3;
    } catch (const ValidationError& e) {
        diagnostic("validation", e.what());
        return 2;
    } catch (const Error& e) {
        diagnostic("error", e.what());
        return 2;
    } catch (const std::exception& e) {
        diagnostic("internal", e.what());
        return 1;
    }
}
