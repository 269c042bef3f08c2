#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fourphoton/io.hpp"
#include "test_util.hpp"

using namespace fourphoton;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("fourphoton_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

RunResult run_cli(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = std::string(FOURPHOTON_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

const char* kThetaScanConfig = R"({
  "source": {"type": "ideal"},
  "circuit": {"theta1": "0 deg", "theta2": "0 deg", "phi": "0 rad"},
  "sweep": {"variable": "theta2", "from": "0 deg", "to": "90 deg", "steps": 361}
})";

const char* kFringeConfig = R"({
  "source": {"type": "ideal"},
  "circuit": {"theta1": "13.684 deg", "theta2": "22.5 deg", "phi": "0 rad"},
  "sweep": {"variable": "phi", "from": "0 rad", "to": "6.283185307179586 rad", "steps": 72}
})";

}  // namespace

TEST_CASE("simulate writes a theta scan whose minima sit at the published angles", "[cli]") {
    const fs::path cfg = work_dir() / "theta.json";
    const fs::path csv = work_dir() / "theta.csv";
    spit(cfg, kThetaScanConfig);
    const RunResult r =
        run_cli("simulate --config " + cfg.string() + " --out " + csv.string());
    REQUIRE(r.exit_code == 0);

    const ScanTable t = load_scan_csv(csv.string());
    CHECK(t.scenario == "theta-scan");
    REQUIRE(t.rows() == 361);
    // grid resolution is 0.25 deg; the first minimum must land next to 13.68
    size_t best = 0;
    for (size_t i = 0; i < t.rows(); ++i)
        if (t.x[i] <= 20.0 && t.probability[i] < t.probability[best]) best = i;
    CHECK(std::abs(t.x[best] - 13.684) <= 0.25);
}

TEST_CASE("simulate rejects configs with unknown keys, naming the key", "[cli]") {
    const fs::path cfg = work_dir() / "bad.json";
    spit(cfg, R"({
      "source": {"type": "ideal"},
      "circuit": {"theta1": "0 deg", "theta2": "0 deg", "phi": "0 rad"},
      "sweep": {"variable": "phi", "from": "0 rad", "to": "1 rad", "steps": 5},
      "dark_counts": 100
    })");
    const fs::path csv = work_dir() / "bad.csv";
    const RunResult r =
        run_cli("simulate --config " + cfg.string() + " --out " + csv.string());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("dark_counts") != std::string::npos);
}

TEST_CASE("sample is deterministic in the seed", "[cli]") {
    const fs::path cfg = work_dir() / "fringe.json";
    const fs::path csv = work_dir() / "fringe.csv";
    spit(cfg, kFringeConfig);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + csv.string()).exit_code ==
            0);

    const fs::path s1 = work_dir() / "s1.csv";
    const fs::path s2 = work_dir() / "s2.csv";
    REQUIRE(run_cli("sample " + csv.string() + " --counts 5000 --seed 11 --out " + s1.string())
                .exit_code == 0);
    REQUIRE(run_cli("sample " + csv.string() + " --counts 5000 --seed 11 --out " + s2.string())
                .exit_code == 0);
    CHECK(slurp(s1) == slurp(s2));

    const fs::path s3 = work_dir() / "s3.csv";
    REQUIRE(run_cli("sample " + csv.string() + " --counts 5000 --seed 12 --out " + s3.string())
                .exit_code == 0);
    CHECK(slurp(s1) != slurp(s3));

    SECTION("zero counts give an all-zero counts column") {
        const fs::path z = work_dir() / "zero.csv";
        REQUIRE(
            run_cli("sample " + csv.string() + " --counts 0 --seed 1 --out " + z.string())
                .exit_code == 0);
        const ScanTable t = load_scan_csv(z.string());
        REQUIRE(t.has_counts());
        for (auto c : t.counts) CHECK(c == 0);
    }
}

TEST_CASE("fit recovers the ideal fringe from sampled counts", "[cli]") {
    const fs::path csv = work_dir() / "fringe.csv";      // produced above
    const fs::path sampled = work_dir() / "heavy.csv";
    REQUIRE(run_cli("sample " + csv.string() + " --counts 1000000 --seed 5 --out " +
                    sampled.string())
                .exit_code == 0);
    const fs::path report = work_dir() / "fit.json";
    const RunResult r = run_cli("fit " + sampled.string() + " --model fringe --out " +
                                report.string());
    REQUIRE(r.exit_code == 0);
    const Json j = Json::parse(slurp(report));
    CHECK(j.contains("params"));
    CHECK(j.contains("stderr"));
    CHECK(j.contains("rss"));
    CHECK(j.contains("r2"));
    CHECK(j.contains("iterations"));
    CHECK(j.contains("converged"));
    CHECK(j["converged"].get<bool>());
    CHECK(std::abs(j["params"]["V4"].get<double>() - 1.0) < 0.01);
    CHECK(std::abs(j["params"]["V2"].get<double>()) < 0.01);
    // stdout carries the same JSON
    CHECK(r.out.find("\"params\"") != std::string::npos);
}

TEST_CASE("fit exits 1 on underdetermined data", "[cli]") {
    const fs::path tiny = work_dir() / "tiny.csv";
    spit(tiny,
         "# fourphoton v1 fringe\nx,probability,counts\n"
         "0.0000000000000000e+00,1.0000000000000001e-01,10\n"
         "1.0000000000000000e+00,2.0000000000000001e-01,20\n");
    const RunResult r = run_cli("fit " + tiny.string() + " --model fringe");
    CHECK(r.exit_code == 1);
    CHECK(!r.err.empty());
}

TEST_CASE("fit accepts the weighted and free-phase flags", "[cli]") {
    const fs::path sampled = work_dir() / "heavy.csv";  // produced above
    CHECK(run_cli("fit " + sampled.string() + " --model fringe --weighted").exit_code == 0);
    CHECK(run_cli("fit " + sampled.string() + " --model fringe --free-phase").exit_code == 0);
}

TEST_CASE("balance finds the null angle for the ideal source", "[cli]") {
    const fs::path cfg = work_dir() / "balance.json";
    spit(cfg, R"({"source": {"type": "ideal"}})");
    const fs::path out = work_dir() / "balance.json.out";
    const RunResult r = run_cli("balance --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    const Json j = Json::parse(slurp(out));
    CHECK(std::abs(j["theta1_deg"].get<double>() - 13.684) <= 0.05);
    CHECK(std::abs(j["v2"].get<double>()) < 1e-9);
    CHECK(j["balanced"].get<bool>());
}

TEST_CASE("balance requires a source", "[cli]") {
    const fs::path cfg = work_dir() / "nosource.json";
    spit(cfg, R"({"tolerance": 0.01})");
    CHECK(run_cli("balance --config " + cfg.string()).exit_code == 1);
}

TEST_CASE("report passes and is byte-deterministic", "[cli]") {
    const fs::path r1 = work_dir() / "report1.txt";
    const fs::path r2 = work_dir() / "report2.txt";
    const RunResult a = run_cli("report --out " + r1.string());
    REQUIRE(a.exit_code == 0);
    CHECK(a.out.find("RESULT: 10/10 checks passed") != std::string::npos);
    const RunResult b = run_cli("report --out " + r2.string());
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(r1) == slurp(r2));
    CHECK(!slurp(r1).empty());
}

TEST_CASE("unknown subcommands and missing files exit 1", "[cli]") {
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli("simulate --config /nonexistent.json --out /tmp/x.csv").exit_code == 1);
    CHECK(run_cli("fit /nonexistent.csv --model dip").exit_code == 1);
}

TEST_CASE("the shipped sample configs stay runnable", "[cli]") {
    const fs::path configs = fs::path(FOURPHOTON_CONFIG_DIR);
    for (const char* name : {"hom_dip.json", "theta_scan.json", "fringe.json",
                             "fringe_detuned.json"}) {
        const fs::path out = work_dir() / (std::string("shipped_") + name + ".csv");
        const RunResult r = run_cli("simulate --config " + (configs / name).string() +
                                    " --out " + out.string());
        INFO(name);
        CHECK(r.exit_code == 0);
    }
    const RunResult r =
        run_cli("balance --config " + (configs / "balance.json").string());
    CHECK(r.exit_code == 0);
}
