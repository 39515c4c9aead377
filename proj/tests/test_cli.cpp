#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("ffl_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = workdir() / name;
    std::ofstream(p) << body;
    return p;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(FFL_CLI_PATH) + "' " + args + " > '" +
                            (workdir() / "stdout.txt").string() + "' 2> '" + (workdir() / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<double>> rows;
    bool header = false;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                row.push_back(NAN);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

const char* kDyadic = R"j({"system": {"maps": [{"r": 0.5, "t": 0}, {"r": 0.5, "t": 0.5}]},
  "scan": {"xi_min": 1, "xi_max": 20, "points": 20, "tol": 1e-9}})j";

const char* kCantor = R"j({"system": {"maps": [{"r": "1/3", "t": 0}, {"r": "1/3", "t": "2/3"}]},
  "map": "(mul x x)", "inverse": "(sqrt x)",
  "scan": {"xi_min": 1, "xi_max": 100, "points": 16, "log_spacing": true, "tol": 1e-6},
  "decay": {"band_base": 3, "j_lo": 2, "j_hi": 6, "cover_j": [3, 4], "n_lo": 0, "n_hi": 8, "tol": 1e-6},
  "equidist": {"N": 200, "seeds": 10}, "conjugate": {"samples": 20000}})j";

}  // namespace

TEST_CASE("uniform measure vanishes at nonzero integers") {
    const auto cfg = write_config("dyadic.json", kDyadic);
    const auto out = workdir() / "dyadic";
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + out.string() + "' fourier-scan") == 0);
    const auto text = slurp(out / "fourier_scan.csv");
    CHECK(text.rfind("# command=fourier-scan\n# config_hash=fnv1a64:", 0) == 0);
    CHECK(text.find("\nxi,re,im,abs,err,err_kind\n") != std::string::npos);
    const auto rows = csv_rows(out / "fourier_scan.csv");
    REQUIRE(rows.size() == 20);
    for (const auto& r : rows) {
        CHECK(r[0] == std::round(r[0]));
        CHECK(r[3] <= 1e-6);
    }
}

TEST_CASE("reruns are byte-identical and seeds matter") {
    const auto cfg = write_config("cantor.json", kCantor);
    for (const std::string cmd : {"equidist count", "decay fit", "conjugate", "disintegrate sample"}) {
        CAPTURE(cmd);
        const auto a = workdir() / "rerun_a", b = workdir() / "rerun_b";
        REQUIRE(run("--config '" + cfg.string() + "' --out '" + a.string() + "' " + cmd) == 0);
        REQUIRE(run("--config '" + cfg.string() + "' --out '" + b.string() + "' " + cmd) == 0);
        for (const auto& e : fs::directory_iterator(a)) CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
        fs::remove_all(a);
        fs::remove_all(b);
    }
    const auto s1 = workdir() / "seed1", s2 = workdir() / "seed2";
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + s1.string() + "' --seed 1 equidist count") == 0);
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + s2.string() + "' --seed 2 equidist count") == 0);
    CHECK(slurp(s1 / "equidist_count.csv") != slurp(s2 / "equidist_count.csv"));
    CHECK(slurp(s2 / "equidist_count.csv").find("# seed=2\n") != std::string::npos);
}

TEST_CASE("probe along powers of three stays constant") {
    const auto cfg = write_config("cantor.json", kCantor);
    const auto out = workdir() / "probe";
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + out.string() + "' decay probe") == 0);
    const auto rows = csv_rows(out / "probe.csv");
    REQUIRE(rows.size() == 9);
    for (const auto& r : rows) CHECK(std::abs(r[3] - rows.front()[3]) <= 2e-6 + r[4] + rows.front()[4]);
    CHECK(fs::exists(out / "decay.svg"));
    const auto doc = nlohmann::json::parse(slurp(out / "decay.json"));
    CHECK(doc.at("mode") == "probe");
}

TEST_CASE("environment overrides config and flags override environment") {
    const auto cfg = write_config("cantor.json", kCantor);
    const auto env_out = workdir() / "env_out";
    REQUIRE(run("equidist count", "FFL_CONFIG='" + cfg.string() + "' FFL_OUT='" + env_out.string() + "' FFL_SEED=7") == 0);
    CHECK(slurp(env_out / "equidist_count.csv").find("# seed=7\n") != std::string::npos);
    const auto flag_out = workdir() / "flag_out";
    REQUIRE(run("--seed 9 --out '" + flag_out.string() + "' equidist count",
                "FFL_CONFIG='" + cfg.string() + "' FFL_OUT='" + env_out.string() + "' FFL_SEED=7") == 0);
    CHECK(slurp(flag_out / "equidist_count.csv").find("# seed=9\n") != std::string::npos);
}

TEST_CASE("exit codes and diagnostics") {
    const auto bad = write_config("bad.json", R"j({"system": {"maps": [{"r": 0.5, "t": 0}]}, "colour": 1})j");
    CHECK(run("--config '" + bad.string() + "' fourier-scan") == 2);
    const auto diag = nlohmann::json::parse(slurp(workdir() / "stderr.txt"));
    CHECK(diag.at("error") == "validation");
    CHECK(diag.at("message").get<std::string>().find("colour") != std::string::npos);

    CHECK(run("--bogus-flag") == 2);
    CHECK(run("") == 2);
    CHECK(run("fourier-scan") == 2);  // no config anywhere

    const auto cfg = write_config("dyadic.json", kDyadic);
    const auto out = workdir() / "budget";
    CHECK(run("--config '" + cfg.string() + "' --out '" + out.string() + "' pushforward-scan") == 2);  // no map
    const auto starved = write_config("starved.json", R"j({"system": {"maps": [{"r": 0.5, "t": 0}, {"r": 0.5, "t": 0.5}]},
        "map": "(mul x x)", "scan": {"xi_min": 1000, "xi_max": 1000, "points": 1, "tol": 1e-12}})j");
    CHECK(run("--config '" + starved.string() + "' --out '" + out.string() + "' --budget 3 pushforward-scan") == 3);
    CHECK(nlohmann::json::parse(slurp(workdir() / "stderr.txt")).at("error") == "budget");
}

TEST_CASE("report and verify") {
    const auto cfg = write_config("cantor.json", kCantor);
    const auto out = workdir() / "report";
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + out.string() + "' fourier-scan") == 0);
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + out.string() + "' pushforward-scan") == 0);
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + out.string() + "' report") == 0);
    CHECK(fs::exists(out / "fourier_scan.svg"));
    CHECK(fs::exists(out / "pushforward_scan.svg"));
    const auto svg = slurp(out / "fourier_scan.svg");
    REQUIRE(run("--config '" + cfg.string() + "' --out '" + out.string() + "' report") == 0);
    CHECK(slurp(out / "fourier_scan.svg") == svg);
    CHECK(run("--config '" + cfg.string() + "' --out '" + out.string() + "' verify") == 0);
    CHECK(run("--config '" + cfg.string() + "' --out '" + out.string() + "' verify --input '" +
              (out / "pushforward_scan.csv").string() + "'") == 0);

    // A tampered row must be caught.
    std::ifstream in(out / "fourier_scan.csv");
    std::string text;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("1,", 0) == 0) line = "1,5.0" + line.substr(line.find(',', 2));
        text += line + "\n";
    }
    std::ofstream(out / "tampered.csv") << text;
    CHECK(run("--config '" + cfg.string() + "' --out '" + out.string() + "' verify --input '" +
              (out / "tampered.csv").string() + "'") == 2);
}
