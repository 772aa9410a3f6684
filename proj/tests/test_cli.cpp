#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / "winmart_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(WINMART_CLI_PATH) + " " + args +
                            " > " + (kWork / "out.txt").string() + " 2> " +
                            (kWork / "err.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string out_text() { return slurp(kWork / "out.txt"); }

}  // namespace

TEST_CASE("solve, value, simulate workflow") {
    fs::create_directories(kWork);
    const std::string field = (kWork / "d1.mafg").string();

    CHECK(run("solve --dim 1 --levels 6,8 --h 2e-3 --out " + field) == 0);
    CHECK(fs::exists(field));
    CHECK(fs::exists(field + ".report.txt"));
    CHECK(out_text().find("sandwich_violations=0") != std::string::npos);

    CHECK(run("value --field " + field + " --t 0 --x 0.5") == 0);
    CHECK(out_text().find("value=") != std::string::npos);
    CHECK(out_text().find("sigma_star=") != std::string::npos);
    CHECK(out_text().find("lower_bound=") != std::string::npos);

    // out-of-region query
    CHECK(run("value --field " + field + " --t 0 --x 1e-9") == 2);

    // near-terminal time: value close to zero
    CHECK(run("value --field " + field + " --t 0.999 --x 0.5") == 0);
    const auto text = out_text();
    const auto pos = text.find("value=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::abs(std::stod(text.substr(pos + 6))) < 1e-2);
}

TEST_CASE("simulate determinism and dumps") {
    fs::create_directories(kWork);
    const std::string field = (kWork / "d1b.mafg").string();
    REQUIRE(run("solve --dim 1 --levels 6,8 --h 2e-3 --out " + field) == 0);

    const std::string base = " simulate --field " + field +
                             " --x0 0.5 --paths 40 --seed 7 --h-u 5e-3 --g-stop 6.5";
    CHECK(run(base + " --dump " + (kWork / "p1.csv").string() + " --summary " +
              (kWork / "s1.txt").string()) == 0);
    CHECK(run(base + " --dump " + (kWork / "p2.csv").string() + " --summary " +
              (kWork / "s2.txt").string()) == 0);
    CHECK(slurp(kWork / "p1.csv") == slurp(kWork / "p2.csv"));  // bitwise
    CHECK(slurp(kWork / "s1.txt") == slurp(kWork / "s2.txt"));
    CHECK(!slurp(kWork / "p1.csv").empty());

    // baseline flag selects the explicit diffusion
    CHECK(run(base + " --baseline logistic1d --summary " +
              (kWork / "s3.txt").string()) == 0);
    CHECK(slurp(kWork / "s3.txt").find("kind=logistic1d") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
    fs::create_directories(kWork);
    const std::string field = (kWork / "d1c.mafg").string();
    REQUIRE(run("solve --dim 1 --levels 6,8 --h 2e-3 --out " + field) == 0);

    CHECK(run("solve --dim 1 --levels 8,6 --h 2e-3 --out " +
              (kWork / "x.mafg").string()) == 2);               // bad level order
    CHECK(run("simulate --field " + (kWork / "missing.mafg").string() +
              " --x0 0.5 --paths 5 --seed 1") == 2);            // missing field
    CHECK(run("simulate --field " + field + " --x0 0.2,0.3 --paths 5 --seed 1") == 2);
    CHECK(run("simulate --field " + field + " --x0 0.5 --paths 5") == 2);  // no seed
    CHECK(run("solve --dim 1 --levels 6,8 --frobnicate") == 2);  // unknown flag
    CHECK(run("") == 2);                                         // no subcommand
    CHECK(run("--help") == 0);
}

TEST_CASE("config file provides defaults and rejects unknown keys") {
    fs::create_directories(kWork);
    const std::string cfgfile = (kWork / "solve.cfg").string();
    {
        std::ofstream cfg(cfgfile);
        cfg << "dim=1\nlevels=6,8\nh=2e-3\nout=" << (kWork / "cfg.mafg").string()
            << "\n";
    }
    CHECK(run("solve --config " + cfgfile) == 0);
    CHECK(fs::exists(kWork / "cfg.mafg"));
    {
        std::ofstream cfg(cfgfile, std::ios::app);
        cfg << "unknown_key=1\n";
    }
    CHECK(run("solve --config " + cfgfile) == 2);
}

TEST_CASE("verify quick subset") {
    fs::create_directories(kWork);
    CHECK(run("verify --seed 7 --quick --only barrier_ratio") == 0);
    CHECK(out_text().find("verdict=pass") != std::string::npos);
    CHECK(run("verify --quick --only barrier_ratio") == 2);  // seed is mandatory
}
