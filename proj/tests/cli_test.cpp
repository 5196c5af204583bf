#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "config.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using namespace exlab::cli;

namespace {

const fs::path kSource = EXLAB_SOURCE_DIR;
const std::string kCli = EXLAB_CLI_PATH;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("exlab_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "config.yaml";
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = kCli + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool has_error(const std::vector<Diagnostic>& d, const std::string& needle) {
    for (const auto& x : d) {
        if (x.severity == Diagnostic::Severity::Error && x.message.find(needle) != std::string::npos) return true;
    }
    return false;
}

const char* kBinarySim = R"(scenario: simulate
distributions:
  - [0.3, 0.7]
  - [0.6, 0.4]
alpha: 1
k: 2
lambdas: [0.05, 0.05]
simulate:
  test: two-phase
  trials: 3000
  seed: 11
  n_grid: [4, 6]
  exact: true
)";

}  // namespace

TEST(ConfigParse, UnknownKeyReportsLine) {
    try {
        parse_config("scenario: exponents\ndistributions:\n  - [0.5, 0.5]\n  - [0.2, 0.8]\nalhpa: 2\n");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 5);
        EXPECT_EQ(e.field(), "alhpa");
    }
}

TEST(ConfigParse, SyntaxAndTypeErrorsReportLines) {
    try {
        parse_config("scenario: exponents\ndistributions: [[0.5, 0.5]\nalpha: 1\n");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_GT(e.line(), 0);
    }
    try {
        parse_config("distributions:\n  - [0.5, 0.5]\n  - [0.2, 0.8]\nalpha: two\n");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 4);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
    try {
        parse_config("distributions:\n  - [0.5, 0.6]\n  - [0.2, 0.8]\n");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 2);
    }
}

TEST(ConfigValidate, DuplicateDistributions) {
    const auto c = parse_config("distributions:\n  - [0.5, 0.5]\n  - [0.5, 0.5]\nalpha: 1\n");
    EXPECT_TRUE(has_error(validate(c, Scenario::Exponents), "distinct"));
}

TEST(ConfigValidate, RepositoryConfigsAreClean) {
    for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
        const auto c = load_config(entry.path().string());
        ASSERT_TRUE(c.scenario) << entry.path();
        EXPECT_TRUE(validate(c, *c.scenario).empty()) << entry.path();
    }
}

TEST(ConfigValidate, GammaAboveBarWarnsFixedLength) {
    const auto c = parse_config("distributions:\n  - [0.9, 0.1]\n  - [0.2, 0.8]\nalpha: 2\ngamma: 5\n");
    const auto d = validate(c, Scenario::Exponents);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].severity, Diagnostic::Severity::Warning);
    EXPECT_NE(d[0].message.find("fixed-length regime"), std::string::npos);
}

TEST(ConfigValidate, EmptyRanges) {
    auto c = parse_config(kBinarySim);
    c.simulate->n_grid.clear();
    EXPECT_TRUE(has_error(validate(c, Scenario::Simulate), "n_grid"));
    c = parse_config("distributions:\n  - [0.9, 0.1]\n  - [0.2, 0.8]\ngammas: []\n");
    EXPECT_TRUE(has_error(validate(c, Scenario::TradeoffSweep), "empty"));
}

TEST(Scenarios, TradeoffFrontierIsMonotone) {
    const auto c = load_config((kSource / "configs/fig1_tradeoff.yaml").string());
    const auto out = run_scenario(c, Scenario::TradeoffSweep);
    const auto& rows = out.table.rows();
    ASSERT_EQ(rows.size(), c.gammas.size() + 2);
    const std::size_t m = c.distributions.size();
    ASSERT_EQ(out.table.header()[3 + m], "bayesian");
    // Each coordinate shrinks as gamma grows and never exceeds the sequential one.
    for (std::size_t j = 0; j <= m; ++j) {
        const double seq = std::stod(rows.front()[3 + j]);
        double prev = seq;
        for (std::size_t r = 1; r + 1 < rows.size(); ++r) {
            const double v = std::stod(rows[r][3 + j]);
            EXPECT_LE(v, prev + 1e-9) << "gamma " << rows[r][2] << " column " << j;
            EXPECT_LE(v, seq + 1e-9);
            prev = v;
        }
    }
    EXPECT_EQ(rows.back()[0], "fixed-length");
    for (const auto& line : out.summary) EXPECT_EQ(line.rfind("theory: ", 0), 0u) << line;
}

TEST(Cli, ValidateAndExitCodes) {
    const auto dir = scratch("codes");
    auto r = run("validate --config " + (kSource / "configs/table1.yaml").string(), dir);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "ok\n");

    r = run("frobnicate --config " + (kSource / "configs/table1.yaml").string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);

    const auto bad = write(dir, "distributions:\n  - [0.5, 0.5]\n  - [0.2, 0.8]\nalpha: 1\ntypo: 3\n");
    r = run("exponents --config " + bad.string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 5"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "exponents.csv"));
}

TEST(Cli, EmptyGridLeavesNoArtifact) {
    const auto dir = scratch("empty_grid");
    std::string text = kBinarySim;
    text.replace(text.find("[4, 6]"), 6, "[]");
    const auto cfg = write(dir, text);
    const auto r = run("simulate --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("simulate.n_grid"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, SizeGuardExitsThree) {
    const auto dir = scratch("guard");
    std::string text = kBinarySim;
    text.replace(text.find("[4, 6]"), 6, "[4, 400]");
    const auto cfg = write(dir, text);
    const auto r = run("simulate --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("size guard"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out" / "simulate.csv"));
}

TEST(Cli, SimulationCsvIsByteStable) {
    const auto dir = scratch("golden");
    const auto cfg = write(dir, kBinarySim);
    const auto a = run("simulate --config " + cfg.string() + " --out " + (dir / "a").string() + " --threads 1", dir);
    const auto b = run("simulate --config " + cfg.string() + " --out " + (dir / "b").string() + " --threads 3", dir);
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    const auto csv = slurp(dir / "a" / "simulate.csv");
    EXPECT_EQ(csv, slurp(dir / "b" / "simulate.csv"));
    EXPECT_EQ(csv.rfind("n,hypothesis,trials,error_count", 0), 0u);
    EXPECT_NE(csv.find("exact_error"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "a" / "simulate.csv.partial"));
    EXPECT_NE(a.out.find("simulation: "), std::string::npos);
    EXPECT_NE(a.out.find("theory: "), std::string::npos);

    const auto c = run("simulate --config " + cfg.string() + " --out " + (dir / "c").string() + " --seed 12", dir);
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NE(csv, slurp(dir / "c" / "simulate.csv"));
}
