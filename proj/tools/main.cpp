// exponent-lab: runs one experiment scenario from a YAML config and writes
// <out>/<scenario>.csv plus a summary on stdout.
//
//   exponent-lab <scenario> --config <path> --out <dir> [--seed S] [--trials T] [--threads W]
//   exponent-lab validate --config <path> [--scenario NAME]
//
// Exit codes: 0 success, 2 config error, 3 size-guard violation, 1 anything else.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "config.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using namespace exlab::cli;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kSizeGuard = 3;

int report(const std::vector<Diagnostic>& diags) {
    int code = kOk;
    for (const auto& d : diags) {
        std::cerr << d.format() << '\n';
        if (d.severity == Diagnostic::Severity::Error) {
            code = std::max(code, d.size_guard ? kSizeGuard : kConfigError);
        }
    }
    return code;
}

void write_atomically(const fs::path& target, const std::string& text) {
    const fs::path tmp = target.string() + ".partial";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << text;
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Error-exponent experiments for two-phase classification and testing"};
    std::string command, config_path, out_dir, scenario_opt;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    unsigned threads = 0;
    app.add_option("command", command,
                   "exponents | tradeoff-sweep | bayes-table | simulate | ht-compare | binary-compare | validate")
        ->required();
    app.add_option("--config", config_path, "YAML experiment config")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override simulate.seed");
    app.add_option("--trials", trials, "override simulate.trials")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "worker threads (default: EXLAB_THREADS, then all cores)");
    app.add_option("--scenario", scenario_opt, "scenario to validate against (validate only)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    const bool validate_only = command == "validate";
    std::optional<Scenario> scenario = parse_scenario(validate_only ? scenario_opt : command);
    if (!validate_only && !scenario) {
        std::cerr << "error: unknown scenario '" << command << "'\n";
        return kConfigError;
    }
    if (!validate_only && out_dir.empty()) {
        std::cerr << "error: --out is required\n";
        return kConfigError;
    }

    ExperimentConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << '\n';
        return kConfigError;
    }
    if (config.scenario && scenario && *config.scenario != *scenario) {
        std::cerr << "error: config declares scenario '" << scenario_name(*config.scenario)
                  << "' but '" << scenario_name(*scenario) << "' was requested\n";
        return kConfigError;
    }
    if (!scenario) scenario = config.scenario;
    if (!scenario) {
        std::cerr << "error: no scenario given in the config or on the command line\n";
        return kConfigError;
    }

    try {
        const auto diags = validate(config, *scenario);
        const int code = report(diags);
        if (validate_only || code != kOk) {
            if (validate_only && diags.empty()) std::cout << "ok\n";
            return code;
        }
        const auto result = run_scenario(config, *scenario, {seed, trials, threads});
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
        fs::create_directories(out_dir);
        const fs::path csv = fs::path(out_dir) / (scenario_name(*scenario) + ".csv");
        write_atomically(csv, result.table.str());
        std::cout << "summary (" << scenario_name(*scenario) << ")\n";
        for (const auto& line : result.summary) std::cout << "  " << line << '\n';
        std::cout << "wrote " << csv.string() << '\n';
        return kOk;
    } catch (const exlab::SizeGuardError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSizeGuard;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
