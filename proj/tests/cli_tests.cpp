#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = FINDIM_BIN;

fs::path scratch_root() {
    static fs::path root = [] {
        std::mt19937_64 rng(std::random_device{}());
        fs::path p = fs::temp_directory_path() /
                     ("findim_cli_" + std::to_string(rng() % 1000000));
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path scratch(const std::string& name) {
    fs::path p = scratch_root() / name;
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

// small resolutions so the whole binary stays fast
const char* kSmallTail = R"(
[solver]
n_modes = 16
t_end = 2
transient_cutoff = 1

[analysis]
n_traj = 3
n_pairs = 4
hull_pairs = 50
spectrum_n = 500
grid = 128
n_tau = 8
similarity_grid = 64
similarity_pairs = 1
)";

}  // namespace

TEST_CASE("version flag") { CHECK(run("--version") == 0); }

TEST_CASE("unknown subcommand and missing arguments exit 2") {
    CHECK(run("frobnicate") == 2);
    CHECK(run("spectrum") == 2);             // needs --d or --spec
    CHECK(run("verify") == 2);               // needs --spec
    CHECK(run("spectrum --d 1 --alpha 0.5") == 2);
    CHECK(run("spectrum --d 0") == 2);
    CHECK(run("spectrum --d nope") == 2);
}

TEST_CASE("spectrum writes csv files and a summary") {
    fs::path out = scratch("spectrum");
    CHECK(run("spectrum --d 1 --N 1000 --alpha 0.8 --out " + out.string()) == 0);
    CHECK(slurp(out / "spectrum.csv").substr(0, 14) == "n,lambda,j,nu\n");
    CHECK(slurp(out / "gaps.csv").substr(0, 19) == "k,n_k,a_k,xi_k,rati");
    auto summary = nlohmann::json::parse(slurp(out / "gap_summary.json"));
    CHECK(summary["verdict"]["status"] == "PASS");
    double slope = summary["spectrum"]["tail_slope"].get<double>();
    CHECK(slope == doctest::Approx(-0.1).epsilon(0.2));
}

TEST_CASE("fully degenerate spectrum has no gap windows and exits 3") {
    fs::path out = scratch("empty");
    CHECK(run("spectrum --d 1,1,1,1,1,1,1,1,1,1,1 --N 11 --out " + out.string()) == 3);
}

TEST_CASE("example emits loadable specs that verify cleanly") {
    fs::path out = scratch("examples");
    CHECK(run("example --out " + out.string()) == 0);
    for (const char* name :
         {"scalar_diffusion", "commuting_family", "block_family", "violating_family"})
        CHECK(fs::exists(out / (std::string(name) + ".toml")));

    // spec + tiny solver/analysis tables for a quick full pipeline run
    std::string spec = slurp(out / "scalar_diffusion.toml");
    spec = spec.substr(0, spec.find("[solver]")) + kSmallTail;
    write(out / "small.toml", spec);
    fs::path run1 = scratch("verify1");
    CHECK(run("verify --spec " + (out / "small.toml").string() + " --seed 9 --out " +
              run1.string()) == 0);
    auto report = nlohmann::json::parse(slurp(run1 / "report.json"));
    CHECK(report["overall_supported"] == true);
    CHECK(report["checks"].size() >= 5);
    for (const auto& entry : report["checks"]) {
        CHECK(entry.contains("status"));
        CHECK(!entry["detail"].get<std::string>().empty());
    }

    // determinism: same seed, fresh directory, byte-identical report
    fs::path run2 = scratch("verify2");
    CHECK(run("verify --spec " + (out / "small.toml").string() + " --seed 9 --out " +
              run2.string()) == 0);
    CHECK(slurp(run1 / "report.json") == slurp(run2 / "report.json"));

    // manifest carries the timestamp, not the report
    CHECK(slurp(run1 / "report.json").find("timestamp") == std::string::npos);
    CHECK(slurp(run1 / "manifest.json").find("timestamp") != std::string::npos);
}

TEST_CASE("corrupt specs exit 2 with a position, blow-ups exit 4") {
    fs::path out = scratch("errors");
    write(out / "bad.toml", "[system]\nm = 1\nD = [1]\nf = [\"(u1\"]\ng = [\"0\"]\n");
    CHECK(run("verify --spec " + (out / "bad.toml").string() + " --out " + out.string()) == 2);

    write(out / "blow.toml",
          "[system]\nm = 1\nD = [1]\nf = [\"0\"]\ng = [\"4000*u1^3\"]\n"
          "[solver]\nt_end = 5\ntransient_cutoff = 0\n[analysis]\nn_traj = 2\n");
    CHECK(run("simulate --spec " + (out / "blow.toml").string() + " --out " + out.string() +
              " --seed 1") == 4);
}

TEST_CASE("simulate writes trajectory files with the documented header") {
    fs::path out = scratch("sim");
    write(out / "heat.toml",
          "[system]\nm = 1\nD = [1]\nf = [\"0\"]\ng = [\"0\"]\n"
          "[solver]\nt_end = 0.5\ntransient_cutoff = 0\nn_modes = 8\ndt = 0.01\n"
          "[analysis]\nn_traj = 2\n");
    CHECK(run("simulate --spec " + (out / "heat.toml").string() + " --out " + out.string() +
              " --seed 3") == 0);
    CHECK(slurp(out / "trajectory_0.csv").substr(0, 9) == "t,j,nu,c\n");
    CHECK(fs::exists(out / "trajectory_1.csv"));
    CHECK(fs::exists(out / "manifest.json"));
}
