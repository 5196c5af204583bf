#pragma once

// Experiment configuration: a YAML document, loaded with line-numbered
// diagnostics. The grammar is documented in README.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exlab/exponents.hpp"
#include "exlab/montecarlo.hpp"

namespace exlab::cli {

enum class Scenario { Exponents, TradeoffSweep, BayesTable, Simulate, HtCompare, BinaryCompare };

std::optional<Scenario> parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, int line, const std::string& message);
    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
    int line_;
};

struct TableRow {
    double gamma = 0.0;
    double k = 1.0;
    int line = 0;
};

enum class SimTest { TwoPhase, ThresholdBinary, KnownLaw, Sequential };

struct SimSection {
    SimTest test = SimTest::TwoPhase;
    std::int64_t trials = 10000;
    std::uint64_t seed = 1;
    std::vector<std::int64_t> n_grid;
    bool exact = false;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;
    std::vector<double> betas;
    std::int64_t max_steps = 1000000;
    int line = 0;
};

struct ExperimentConfig {
    std::optional<Scenario> scenario;
    std::vector<Distribution> distributions;
    double alpha = 1.0;
    double k = 1.0;
    double gamma = 0.0;
    ProblemKind kind = ProblemKind::Classification;
    std::optional<std::vector<double>> lambdas;
    std::vector<double> gammas;
    std::vector<TableRow> rows;
    std::optional<double> grid_step;
    std::optional<SimSection> simulate;
    unsigned threads = 0;

    int distributions_line = 0;
    int lambdas_line = 0;
    int gammas_line = 0;
    int rows_line = 0;

    /// Throws std::invalid_argument when the instance itself is malformed.
    ProblemInstance instance() const;
};

/// Throws ConfigError on syntax errors, unknown keys and malformed values.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string field;
    int line = 0;
    std::string message;
    /// Set for errors that exit with the size-guard status.
    bool size_guard = false;

    std::string format() const;
};

/// Semantic checks. Never mutates `config`.
std::vector<Diagnostic> validate(const ExperimentConfig& config, Scenario scenario);

}  // namespace exlab::cli
