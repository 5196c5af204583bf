#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"

namespace exlab::cli {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    unsigned threads = 0;
};

struct ScenarioOutput {
    CsvTable table{{}};
    /// Headline lines, each tagged "theory" or "simulation".
    std::vector<std::string> summary;
    std::vector<std::string> warnings;
};

/// Runs one scenario on a validated config. Throws SizeGuardError when exact
/// enumeration is requested beyond the guard.
ScenarioOutput run_scenario(const ExperimentConfig& config, Scenario scenario,
                            const RunOverrides& overrides = {});

}  // namespace exlab::cli
