#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace exlab::cli {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

[[noreturn]] void fail(const std::string& field, const YAML::Node& n, const std::string& msg) {
    throw ConfigError(field, line_of(n), msg);
}

template <class T>
T scalar(const YAML::Node& n, const std::string& field, const char* expected) {
    if (!n.IsScalar()) {
        fail(field, n, std::string("expected ") + expected);
    }
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(field, n, std::string("expected ") + expected + ", got '" + n.Scalar() + "'");
    }
}

double real(const YAML::Node& n, const std::string& field) {
    const double v = scalar<double>(n, field, "a number");
    if (!std::isfinite(v)) {
        fail(field, n, "must be finite");
    }
    return v;
}

std::int64_t integer(const YAML::Node& n, const std::string& field) {
    return scalar<std::int64_t>(n, field, "an integer");
}

template <class F>
auto sequence(const YAML::Node& n, const std::string& field, F&& each) {
    if (!n.IsSequence()) {
        fail(field, n, "expected a list");
    }
    std::vector<decltype(each(n, field))> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        out.push_back(each(n[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

void check_keys(const YAML::Node& map, const std::string& where, const std::set<std::string>& allowed) {
    if (!map.IsMap()) {
        fail(where, map, "expected a mapping");
    }
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            fail(where.empty() ? key : where + "." + key, kv.first, "unknown key");
        }
    }
}

SimTest parse_test(const YAML::Node& n) {
    const auto s = scalar<std::string>(n, "simulate.test", "a test name");
    if (s == "two-phase") return SimTest::TwoPhase;
    if (s == "threshold-binary") return SimTest::ThresholdBinary;
    if (s == "known-law") return SimTest::KnownLaw;
    if (s == "sequential") return SimTest::Sequential;
    fail("simulate.test", n, "expected two-phase, threshold-binary, known-law or sequential");
}

ExperimentConfig from_yaml(const YAML::Node& root) {
    ExperimentConfig c;
    if (root.IsNull()) {
        throw ConfigError("", 1, "empty configuration");
    }
    check_keys(root, "",
               {"scenario", "kind", "distributions", "alpha", "k", "gamma", "lambdas", "gammas",
                "rows", "solver", "simulate", "threads"});
    if (auto n = root["scenario"]) {
        const auto name = scalar<std::string>(n, "scenario", "a scenario name");
        c.scenario = parse_scenario(name);
        if (!c.scenario) {
            fail("scenario", n, "unknown scenario '" + name + "'");
        }
    }
    if (auto n = root["kind"]) {
        const auto s = scalar<std::string>(n, "kind", "classification or hypothesis");
        if (s == "classification") {
            c.kind = ProblemKind::Classification;
        } else if (s == "hypothesis") {
            c.kind = ProblemKind::Hypothesis;
        } else {
            fail("kind", n, "expected classification or hypothesis");
        }
    }
    const auto dists = root["distributions"];
    if (!dists) {
        throw ConfigError("distributions", line_of(root), "missing required key");
    }
    c.distributions_line = line_of(dists);
    if (!dists.IsSequence()) {
        fail("distributions", dists, "expected a list of probability vectors");
    }
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const std::string field = "distributions[" + std::to_string(i) + "]";
        auto probs = sequence(dists[i], field, real);
        try {
            c.distributions.emplace_back(std::move(probs));
        } catch (const std::invalid_argument& e) {
            fail(field, dists[i], e.what());
        }
    }
    if (auto n = root["alpha"]) c.alpha = real(n, "alpha");
    if (auto n = root["k"]) c.k = real(n, "k");
    if (auto n = root["gamma"]) c.gamma = real(n, "gamma");
    if (auto n = root["lambdas"]) {
        c.lambdas = sequence(n, "lambdas", real);
        c.lambdas_line = line_of(n);
    }
    if (auto n = root["gammas"]) {
        c.gammas = sequence(n, "gammas", real);
        c.gammas_line = line_of(n);
    }
    if (auto n = root["rows"]) {
        c.rows_line = line_of(n);
        c.rows = sequence(n, "rows", [](const YAML::Node& r, const std::string& field) {
            check_keys(r, field, {"gamma", "k"});
            TableRow row;
            row.line = line_of(r);
            if (!r["gamma"] || !r["k"]) {
                fail(field, r, "each row needs gamma and k");
            }
            row.gamma = real(r["gamma"], field + ".gamma");
            row.k = real(r["k"], field + ".k");
            return row;
        });
    }
    if (auto n = root["solver"]) {
        check_keys(n, "solver", {"grid_step"});
        if (auto g = n["grid_step"]) {
            c.grid_step = real(g, "solver.grid_step");
            if (!(*c.grid_step > 0.0 && *c.grid_step <= 0.1)) {
                fail("solver.grid_step", g, "must lie in (0, 0.1]");
            }
        }
    }
    if (auto n = root["threads"]) {
        const auto t = integer(n, "threads");
        if (t < 0 || t > 4096) fail("threads", n, "must lie in [0, 4096]");
        c.threads = static_cast<unsigned>(t);
    }
    if (auto n = root["simulate"]) {
        check_keys(n, "simulate",
                   {"test", "trials", "seed", "n_grid", "exact", "lambda1", "lambda2", "lambda",
                    "betas", "max_steps"});
        SimSection s;
        s.line = line_of(n);
        if (auto v = n["test"]) s.test = parse_test(v);
        if (auto v = n["trials"]) s.trials = integer(v, "simulate.trials");
        if (auto v = n["seed"]) s.seed = scalar<std::uint64_t>(v, "simulate.seed", "a non-negative integer");
        if (auto v = n["n_grid"]) s.n_grid = sequence(v, "simulate.n_grid", integer);
        if (auto v = n["exact"]) s.exact = scalar<bool>(v, "simulate.exact", "true or false");
        if (auto v = n["lambda1"]) s.lambda1 = real(v, "simulate.lambda1");
        if (auto v = n["lambda2"]) s.lambda2 = real(v, "simulate.lambda2");
        if (auto v = n["lambda"]) s.lambda = real(v, "simulate.lambda");
        if (auto v = n["betas"]) s.betas = sequence(v, "simulate.betas", real);
        if (auto v = n["max_steps"]) s.max_steps = integer(v, "simulate.max_steps");
        c.simulate = s;
    }
    return c;
}

}  // namespace

ConfigError::ConfigError(const std::string& field, int line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + (field.empty() ? "" : ", " + field) + ": " +
                         message),
      field_(field),
      line_(line) {}

std::optional<Scenario> parse_scenario(const std::string& name) {
    if (name == "exponents") return Scenario::Exponents;
    if (name == "tradeoff-sweep") return Scenario::TradeoffSweep;
    if (name == "bayes-table") return Scenario::BayesTable;
    if (name == "simulate") return Scenario::Simulate;
    if (name == "ht-compare") return Scenario::HtCompare;
    if (name == "binary-compare") return Scenario::BinaryCompare;
    return std::nullopt;
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Exponents: return "exponents";
        case Scenario::TradeoffSweep: return "tradeoff-sweep";
        case Scenario::BayesTable: return "bayes-table";
        case Scenario::Simulate: return "simulate";
        case Scenario::HtCompare: return "ht-compare";
        case Scenario::BinaryCompare: return "binary-compare";
    }
    return "";
}

ProblemInstance ExperimentConfig::instance() const {
    ProblemInstance inst(distributions, alpha, k, gamma);
    if (grid_step) {
        inst.solver.grid_step = *grid_step;
    }
    return inst;
}

ExperimentConfig parse_config(const std::string& text) {
    try {
        return from_yaml(YAML::Load(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.mark.line + 1, e.msg);
    }
}

ExperimentConfig load_config(const std::string& path) {
    try {
        return from_yaml(YAML::LoadFile(path));
    } catch (const YAML::BadFile&) {
        throw ConfigError("", 0, "cannot read " + path);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.mark.line + 1, e.msg);
    }
}

std::string Diagnostic::format() const {
    std::ostringstream os;
    os << (severity == Severity::Error ? "error" : "warning");
    if (line > 0) os << ": line " << line;
    if (!field.empty()) os << ", " << field;
    os << ": " << message;
    return os.str();
}

std::vector<Diagnostic> validate(const ExperimentConfig& c, Scenario scenario) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string field, int line, std::string msg) {
        out.push_back({Diagnostic::Severity::Error, std::move(field), line, std::move(msg), false});
    };
    auto warning = [&](std::string field, int line, std::string msg) {
        out.push_back({Diagnostic::Severity::Warning, std::move(field), line, std::move(msg), false});
    };

    const std::size_t m = c.distributions.size();
    if (m < 2) {
        error("distributions", c.distributions_line, "at least two distributions are required");
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (c.distributions[i].size() != c.distributions.front().size()) {
            error("distributions", c.distributions_line, "distributions must share one alphabet");
            break;
        }
        for (std::size_t l = 0; l < i; ++l) {
            if (c.distributions[i] == c.distributions[l]) {
                error("distributions", c.distributions_line, "distributions must be distinct");
            }
        }
    }
    if (!(c.alpha > 0.0)) error("alpha", 0, "alpha must be positive");
    if (!(c.k >= 1.0)) error("k", 0, "k must be at least 1");
    if (!(c.gamma >= 0.0)) error("gamma", 0, "gamma must be non-negative");
    if (c.lambdas) {
        if (c.lambdas->size() != m) {
            error("lambdas", c.lambdas_line, "one threshold per distribution is required");
        }
        for (double v : *c.lambdas) {
            if (!(v >= 0.0)) error("lambdas", c.lambdas_line, "thresholds must be non-negative");
        }
    }
    const bool binary_needed =
        scenario == Scenario::BinaryCompare ||
        (scenario == Scenario::Simulate && c.simulate && c.simulate->test == SimTest::ThresholdBinary);
    if (binary_needed && m != 2) {
        error("distributions", c.distributions_line, "this scenario needs exactly two distributions");
    }
    if ((scenario == Scenario::TradeoffSweep || scenario == Scenario::HtCompare ||
         scenario == Scenario::BinaryCompare) &&
        c.gammas.empty()) {
        error("gammas", c.gammas_line, "sweep range must not be empty");
    }
    for (double g : c.gammas) {
        if (!(g >= 0.0)) error("gammas", c.gammas_line, "gamma values must be non-negative");
    }
    if (scenario == Scenario::BayesTable && c.rows.empty()) {
        error("rows", c.rows_line, "bayes-table needs at least one row");
    }
    for (const auto& r : c.rows) {
        if (!(r.gamma >= 0.0) || !(r.k >= 1.0)) error("rows", r.line, "rows need gamma >= 0 and k >= 1");
    }
    if (scenario == Scenario::Simulate) {
        if (!c.simulate) {
            error("simulate", 0, "simulate section is required");
        } else {
            const auto& s = *c.simulate;
            if (s.trials < 1 || s.trials > 0xffffffffLL) {
                error("simulate.trials", s.line, "trials must lie in [1, 2^32)");
            }
            if (s.test == SimTest::Sequential) {
                if (s.betas.empty()) error("simulate.betas", s.line, "sweep range must not be empty");
                for (double b : s.betas) {
                    if (!(b > 0.0 && b < 1.0)) error("simulate.betas", s.line, "beta must lie in (0, 1)");
                }
                if (s.max_steps < 1) error("simulate.max_steps", s.line, "max_steps must be positive");
            } else {
                if (s.n_grid.empty()) error("simulate.n_grid", s.line, "n_grid must not be empty");
                for (std::size_t i = 0; i < s.n_grid.size(); ++i) {
                    if (s.n_grid[i] <= 0 || (i > 0 && s.n_grid[i] <= s.n_grid[i - 1])) {
                        error("simulate.n_grid", s.line, "n_grid must be positive and strictly increasing");
                        break;
                    }
                }
                if (s.test != SimTest::ThresholdBinary && !c.lambdas) {
                    error("lambdas", 0, "lambdas are required for this test");
                }
                if (s.test == SimTest::ThresholdBinary &&
                    !(s.lambda1 >= 0.0 && s.lambda2 >= 0.0 && s.lambda >= 0.0)) {
                    error("simulate", s.line, "thresholds must be non-negative");
                }
            }
        }
    }
    if (!out.empty()) {
        return out;
    }

    // Everything below needs a valid instance.
    const ProblemInstance inst = c.instance();
    if (c.kind == ProblemKind::Classification) {
        double min_bar = kInf;
        for (std::size_t j = 0; j < m; ++j) min_bar = std::min(min_bar, gamma_bar(inst, j));
        if (c.gamma > min_bar) {
            warning("gamma", 0, "fixed-length regime: gamma exceeds min_j gamma_bar_j = " +
                                    std::to_string(min_bar));
        }
    }
    if (c.lambdas && scenario != Scenario::Simulate) {
        if (!feasible_lambda(inst, *c.lambdas, c.kind)) {
            warning("lambdas", c.lambdas_line,
                    "fixed-length regime: thresholds lie outside the feasible region");
        } else {
            for (std::size_t j = 0; j < m; ++j) {
                const double e = c.kind == ProblemKind::Classification
                                     ? f_exponent(inst, *c.lambdas, j)
                                     : gamma_exponent(inst, *c.lambdas, j);
                if (e < c.gamma) {
                    warning("lambdas", c.lambdas_line,
                            "fixed-length regime: excess-length exponent of hypothesis " +
                                std::to_string(j + 1) + " is below gamma");
                    break;
                }
            }
        }
    }
    if (scenario == Scenario::Simulate && c.simulate && c.simulate->exact &&
        c.simulate->test != SimTest::Sequential) {
        SimPlan plan{inst};
        plan.kind = c.simulate->test == SimTest::ThresholdBinary ? TestKind::ThresholdBinary
                    : c.simulate->test == SimTest::KnownLaw      ? TestKind::KnownLaw
                                                                 : TestKind::TwoPhase;
        for (auto n : c.simulate->n_grid) {
            const double size = enumeration_size(plan, n);
            if (size > kEnumerationLimit) {
                out.push_back({Diagnostic::Severity::Error, "simulate.exact", c.simulate->line,
                               "size guard: exact enumeration at n = " + std::to_string(n) + " visits " +
                                   std::to_string(size) + " joint types (limit 1e7)",
                               true});
                break;
            }
        }
    }
    return out;
}

}  // namespace exlab::cli
