#include "hvlab/cli.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace hvlab::cli;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("hvlab-test-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_args(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"hvlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("chsh-scan: maxima at the advertised angles") {
    const auto dir = temp_dir("scan");
    REQUIRE(run_args({"chsh-scan", "--theta-steps", "360", "--out", dir.string()}) == 0);

    const std::string csv = slurp(dir / "chsh_scan.csv");
    CHECK(csv.rfind("theta,singlet_chsh,mixture_chsh,mixture_lhs\n", 0) == 0);

    double best_singlet = 0.0, best_theta = 0.0, best_mixture = 0.0;
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line); // header
    while (std::getline(ss, line)) {
        double theta, s, m, lhs;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &theta, &s, &m, &lhs) == 4);
        if (s > best_singlet) {
            best_singlet = s;
            best_theta = theta;
        }
        best_mixture = std::max(best_mixture, m);
        CHECK(m == doctest::Approx(lhs).epsilon(1e-10));
    }
    CHECK(best_singlet == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(best_theta == doctest::Approx(M_PI / 3.0).epsilon(1e-9));
    CHECK(best_mixture == doctest::Approx(2.0).epsilon(1e-9));

    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("trials: error exits on bad input") {
    const auto dir = temp_dir("trials-err");
    CHECK(run_args({"trials", "--model", "mixture", "--n", "0", "--out", dir.string()}) != 0);
    CHECK(run_args({"trials", "--model", "bogus", "--out", dir.string()}) != 0);
    CHECK(run_args({"trials", "--frobnicate", "1", "--out", dir.string()}) != 0);
    CHECK(run_args({"no-such-subcommand"}) != 0);
}

TEST_CASE("trials: record file shape") {
    const auto dir = temp_dir("trials");
    REQUIRE(run_args({"trials", "--model", "mixture", "--n", "50", "--theta-b", "0.5",
                      "--out", dir.string()}) == 0);
    const std::string csv = slurp(dir / "trials.csv");
    CHECK(csv.rfind("trial,label,A,B\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
    const std::string summary = slurp(dir / "trials_summary.csv");
    CHECK(summary.rfind("model,n,estimate,stderr\n", 0) == 0);
}

TEST_CASE("reruns are byte-identical, across runs and thread counts") {
    const auto base = temp_dir("det");
    const std::vector<std::vector<std::string>> cases = {
        {"chsh-scan", "--theta-steps", "64"},
        {"trials", "--model", "singlet", "--n", "20000", "--theta-b", "1.1"},
        {"lhv-sim", "--model", "sign", "--n", "20000", "--theta-steps", "8"},
        {"dispersion-check"},
        {"bohm-evolve", "--preset", "free-gaussian", "--grid-n", "512", "--box", "25.6",
         "--steps", "100", "--particles", "64", "--save-every", "20"},
    };
    int idx = 0;
    for (const auto& c : cases) {
        const fs::path d1 = base / ("a" + std::to_string(idx));
        const fs::path d2 = base / ("b" + std::to_string(idx));
        auto with_out = [&](const fs::path& d, const char* threads) {
            auto v = c;
            v.push_back("--seed");
            v.push_back("42");
            v.push_back("--threads");
            v.push_back(threads);
            v.push_back("--out");
            v.push_back(d.string());
            return v;
        };
        REQUIRE(run_args(with_out(d1, "1")) == 0);
        REQUIRE(run_args(with_out(d2, "4")) == 0);
        for (const auto& entry : fs::directory_iterator(d1)) {
            if (entry.path().extension() != ".csv") continue;
            CHECK(slurp(entry.path()) == slurp(d2 / entry.path().filename()));
        }
        ++idx;
    }
}

TEST_CASE("manifest rerun reproduces the outputs byte for byte") {
    const auto d1 = temp_dir("manifest-a");
    const auto d2 = temp_dir("manifest-b");
    REQUIRE(run_args({"lhv-sim", "--model", "mixture", "--n", "10000", "--theta-steps",
                      "6", "--seed", "7", "--out", d1.string()}) == 0);
    REQUIRE(run_args({"lhv-sim", "--config", (d1 / "manifest.json").string(), "--out",
                      d2.string()}) == 0);
    CHECK(slurp(d1 / "lhv_correlation.csv") == slurp(d2 / "lhv_correlation.csv"));
    CHECK(slurp(d1 / "lhv_chsh.csv") == slurp(d2 / "lhv_chsh.csv"));
}

TEST_CASE("flat config file with flag override") {
    const auto dir = temp_dir("cfg");
    const fs::path cfg = dir / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "# scan setup\n";
        out << "theta-steps = 16\n";
        out << "seed = 5\n";
    }
    REQUIRE(run_args({"chsh-scan", "--config", cfg.string(), "--theta-steps", "32",
                      "--out", (dir / "out").string()}) == 0);
    const std::string csv = slurp(dir / "out" / "chsh_scan.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 33); // flags win: 32 rows

    const std::string manifest = slurp(dir / "out" / "manifest.json");
    CHECK(manifest.find("\"theta-steps\": \"32\"") != std::string::npos);
    CHECK(manifest.find("\"seed\": \"5\"") != std::string::npos);

    // unknown key in the config file is rejected
    {
        std::ofstream out(cfg);
        out << "not-a-key = 1\n";
    }
    CHECK(run_args({"chsh-scan", "--config", cfg.string(), "--out",
                    (dir / "out2").string()}) != 0);
}

TEST_CASE("dispersion-check: gap column equals d - 1") {
    const auto dir = temp_dir("gap");
    REQUIRE(run_args({"dispersion-check", "--d", "2,3,4", "--out", dir.string()}) == 0);
    const std::string csv = slurp(dir / "von_neumann_gap.csv");
    CHECK(csv == "d,gap\n2,1\n3,2\n4,3\n");

    const std::string norm = slurp(dir / "coincidence_norm.csv");
    std::stringstream ss(norm);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) {
        double eps, integral;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &eps, &integral) == 2);
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("bohm-evolve: two-particle preset reports the verdict") {
    const auto dir = temp_dir("tp");
    REQUIRE(run_args({"bohm-evolve", "--preset", "two-particle-entangled", "--probes",
                      "100", "--out", dir.string()}) == 0);
    const std::string csv = slurp(dir / "factorization.csv");
    CHECK(csv.find("nonlocal") != std::string::npos);

    const auto dir2 = temp_dir("tp2");
    REQUIRE(run_args({"bohm-evolve", "--preset", "two-particle-product", "--probes",
                      "100", "--out", dir2.string()}) == 0);
    CHECK(slurp(dir2 / "factorization.csv").find("local") != std::string::npos);
}
