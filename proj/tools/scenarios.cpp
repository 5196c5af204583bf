#include "scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace exlab::cli {

namespace {

std::string tag(const char* source, const std::string& text) {
    return std::string(source) + ": " + text;
}

std::vector<std::string> hyp_columns(const char* prefix, std::size_t m) {
    std::vector<std::string> cols;
    for (std::size_t j = 0; j < m; ++j) cols.push_back(prefix + std::to_string(j + 1));
    return cols;
}

double excess_value(const ProblemInstance& inst, const std::vector<double>& lam, std::size_t j,
                    ProblemKind kind) {
    return kind == ProblemKind::Classification ? f_exponent(inst, lam, j) : gamma_exponent(inst, lam, j);
}

// Fixed-threshold report; inadmissible thresholds fall back to the
// fixed-length regime with a warning.
ExponentReport report_for(const ProblemInstance& inst, const std::vector<double>& lam, ProblemKind kind,
                          std::vector<std::string>& warnings) {
    try {
        return two_phase_exponents(inst, lam, kind);
    } catch (const std::invalid_argument& e) {
        warnings.push_back(std::string(e.what()) + "; continuing in the fixed-length regime");
        return two_phase_exponents(inst, std::vector<double>(inst.hypotheses(), 0.0), kind);
    }
}

ScenarioOutput run_exponents(const ExperimentConfig& c) {
    const auto inst = c.instance();
    const std::size_t m = inst.hypotheses();
    ScenarioOutput out;
    const ExponentReport rep =
        c.lambdas ? report_for(inst, *c.lambdas, c.kind, out.warnings) : bayes_optimize(inst, c.kind);
    const auto base = baseline_exponents(inst, c.kind);
    out.table = CsvTable({"hypothesis", "kind", "lambda", "excess_exponent", "error_exponent",
                          "fixed_length", "sequential", "regime", "solver_grid_step"});
    for (std::size_t j = 0; j < m; ++j) {
        out.table.add({fmt(static_cast<std::int64_t>(j + 1)), std::string(kind_name(c.kind)),
                       fmt(rep.lambda_used[j]), fmt(excess_value(inst, rep.lambda_used, j, c.kind)),
                       fmt(rep.per_hypothesis[j]), fmt(base.fixed_length.per_hypothesis[j]),
                       fmt(base.sequential.per_hypothesis[j]), std::string(regime_name(rep.regime)),
                       fmt(inst.solver.grid_step)});
    }
    out.summary.push_back(tag("theory", "bayesian " + fmt(rep.bayesian) + " (" +
                                            std::string(regime_name(rep.regime)) + ")"));
    out.summary.push_back(tag("theory", "fixed-length " + fmt(base.fixed_length.bayesian) +
                                            ", sequential " + fmt(base.sequential.bayesian)));
    return out;
}

void sweep_rows(const ProblemInstance& inst, ProblemKind kind, const std::vector<double>& gammas,
                CsvTable& table) {
    const std::size_t m = inst.hypotheses();
    auto row = [&](const std::string& source, const std::string& gamma, const ExponentReport& r) {
        std::vector<std::string> cells{source, std::string(kind_name(kind)), gamma};
        for (std::size_t j = 0; j < m; ++j) cells.push_back(fmt(r.per_hypothesis[j]));
        cells.push_back(fmt(r.bayesian));
        cells.push_back(r.lambda_used.empty() ? "" : fmt(r.lambda_used.front()));
        cells.push_back(std::string(regime_name(r.regime)));
        table.add(std::move(cells));
    };
    const auto base = baseline_exponents(inst, kind);
    row("sequential", "", base.sequential);
    for (double g : gammas) {
        row("two-phase", fmt(g), bayes_optimize(inst.with_gamma(g), kind));
    }
    row("fixed-length", "", base.fixed_length);
}

std::vector<std::string> sweep_header(std::size_t m) {
    std::vector<std::string> h{"source", "kind", "gamma"};
    for (auto& c : hyp_columns("e_", m)) h.push_back(c);
    h.insert(h.end(), {"bayesian", "lambda", "regime"});
    return h;
}

ScenarioOutput run_tradeoff(const ExperimentConfig& c) {
    const auto inst = c.instance();
    ScenarioOutput out;
    out.table = CsvTable(sweep_header(inst.hypotheses()));
    sweep_rows(inst, c.kind, c.gammas, out.table);
    const auto& rows = out.table.rows();
    out.summary.push_back(tag("theory", "sequential bayesian " + rows.front()[3 + inst.hypotheses()]));
    out.summary.push_back(tag("theory", "fixed-length bayesian " + rows.back()[3 + inst.hypotheses()]));
    out.summary.push_back(tag("theory", std::to_string(c.gammas.size()) + " frontier points"));
    return out;
}

ScenarioOutput run_ht_compare(const ExperimentConfig& c) {
    const auto inst = c.instance();
    ScenarioOutput out;
    out.table = CsvTable(sweep_header(inst.hypotheses()));
    sweep_rows(inst, ProblemKind::Hypothesis, c.gammas, out.table);
    sweep_rows(inst, ProblemKind::Classification, c.gammas, out.table);
    for (const auto kind : {ProblemKind::Hypothesis, ProblemKind::Classification}) {
        const auto base = baseline_exponents(inst, kind);
        out.summary.push_back(tag("theory", std::string(kind_name(kind)) + " sequential " +
                                                fmt(base.sequential.bayesian) + ", fixed-length " +
                                                fmt(base.fixed_length.bayesian)));
    }
    return out;
}

ScenarioOutput run_bayes_table(const ExperimentConfig& c) {
    const auto inst = c.instance();
    ScenarioOutput out;
    out.table = CsvTable({"row", "kind", "gamma", "k", "bayesian", "bayesian_per_n", "lambda", "regime",
                          "solver_grid_step"});
    const std::string kind(kind_name(c.kind));
    const auto base = baseline_exponents(inst, c.kind);
    auto add = [&](const std::string& label, const std::string& g, const std::string& k,
                   const ExponentReport& r) {
        out.table.add({label, kind, g, k, fmt(r.bayesian), fmt(r.bayesian_per_n),
                       r.lambda_used.empty() ? "" : fmt(r.lambda_used.front()),
                       std::string(regime_name(r.regime)), fmt(inst.solver.grid_step)});
        out.summary.push_back(tag("theory", label + (g.empty() ? "" : " gamma=" + g + " k=" + k) + " " +
                                                fmt(r.bayesian)));
    };
    add("sequential", "", "", base.sequential);
    for (const auto& row : c.rows) {
        const auto rep = bayes_optimize(inst.with_gamma(row.gamma).with_k(row.k), c.kind);
        add("two-phase", fmt(row.gamma), fmt(row.k), rep);
    }
    add("fixed-length", "", "", base.fixed_length);
    return out;
}

ScenarioOutput run_binary_compare(const ExperimentConfig& c) {
    const auto inst = c.instance();
    ScenarioOutput out;
    out.table = CsvTable({"gamma", "k", "nn_two_phase", "threshold_two_phase", "threshold_lambda1",
                          "threshold_lambda2", "threshold_lambda", "threshold_alpha_inf",
                          "fixed_length", "sequential"});
    const auto base = baseline_exponents(inst, ProblemKind::Classification);
    for (double g : c.gammas) {
        const auto at = inst.with_gamma(g);
        const auto nn = bayes_optimize(at, ProblemKind::Classification);
        const auto thr = threshold_bayes(at);
        const auto inf = alpha_inf_closed_forms(inst[0], inst[1], thr.lambda1, thr.lambda2, thr.lambda,
                                                inst.k(), g);
        if (!inf.diagnostic.empty()) out.warnings.push_back("gamma " + fmt(g) + ": " + inf.diagnostic);
        out.table.add({fmt(g), fmt(inst.k()), fmt(nn.bayesian), fmt(thr.bayesian), fmt(thr.lambda1),
                       fmt(thr.lambda2), fmt(thr.lambda), fmt(std::min(inf.e1, inf.e2)),
                       fmt(base.fixed_length.bayesian), fmt(base.sequential.bayesian)});
    }
    out.summary.push_back(tag("theory", "fixed-length " + fmt(base.fixed_length.bayesian) +
                                            ", sequential " + fmt(base.sequential.bayesian)));
    const auto& first = out.table.rows().front();
    out.summary.push_back(tag("theory", "gamma=" + first[0] + ": nn two-phase " + first[2] +
                                            ", threshold two-phase " + first[3]));
    return out;
}

ScenarioOutput run_sequential(const ExperimentConfig& c, const SimSection& s, std::uint64_t seed,
                              std::int64_t trials, unsigned threads) {
    const auto inst = c.instance();
    const std::size_t m = inst.hypotheses();
    const auto seq = baseline_exponents(inst, ProblemKind::Classification).sequential.per_hypothesis;
    ScenarioOutput out;
    out.table = CsvTable({"beta", "hypothesis", "trials", "error_estimate", "tau_mean", "neg_log_beta",
                          "sequential_exponent", "truncated"});
    std::vector<std::vector<double>> taus(m);
    std::vector<double> xs;
    for (std::size_t b = 0; b < s.betas.size(); ++b) {
        const double beta = s.betas[b];
        // Every beta reuses the same trial streams, so the slope in -log beta is not
        // swamped by independent noise at each point.
        const auto r = run_sequential_sim(inst, beta, trials, seed, 0, threads,
                                          s.max_steps);
        xs.push_back(-std::log(beta));
        for (std::size_t j = 0; j < m; ++j) {
            taus[j].push_back(r.mean_tau[j]);
            out.table.add({fmt(beta), fmt(static_cast<std::int64_t>(j + 1)), fmt(trials),
                           fmt(r.per_hypothesis_error[j]), fmt(r.mean_tau[j]), fmt(xs.back()), fmt(seq[j]),
                           fmt(r.truncated)});
        }
        if (r.truncated > 0) {
            out.warnings.push_back(std::to_string(r.truncated) + " trials hit max_steps at beta " + fmt(beta));
        }
    }
    if (xs.size() >= 2) {
        for (std::size_t j = 0; j < m; ++j) {
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                mx += xs[i];
                my += taus[j][i];
            }
            mx /= static_cast<double>(xs.size());
            my /= static_cast<double>(xs.size());
            double sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sxx += (xs[i] - mx) * (xs[i] - mx);
                sxy += (xs[i] - mx) * (taus[j][i] - my);
            }
            out.summary.push_back(tag("simulation", "hypothesis " + std::to_string(j + 1) +
                                                        " mean tau slope in -log beta " + fmt(sxy / sxx)));
            out.summary.push_back(tag("theory", "hypothesis " + std::to_string(j + 1) +
                                                    " predicted slope " + fmt(1.0 / seq[j])));
        }
    }
    return out;
}

ScenarioOutput run_simulate(const ExperimentConfig& c, const RunOverrides& o) {
    const SimSection& s = *c.simulate;
    const std::uint64_t seed = o.seed.value_or(s.seed);
    const std::int64_t trials = o.trials.value_or(s.trials);
    const unsigned threads = o.threads ? o.threads : c.threads;
    if (s.test == SimTest::Sequential) {
        return run_sequential(c, s, seed, trials, threads);
    }
    const auto inst = c.instance();
    const std::size_t m = inst.hypotheses();
    SimPlan plan{inst};
    plan.trials = trials;
    plan.seed = seed;
    plan.n_grid = s.n_grid;
    plan.threads = threads;
    plan.lambdas = c.lambdas.value_or(std::vector<double>{});
    plan.lambda1 = s.lambda1;
    plan.lambda2 = s.lambda2;
    plan.lambda = s.lambda;

    ScenarioOutput out;
    std::vector<double> bound(m), excess(m);
    switch (s.test) {
        case SimTest::TwoPhase:
        case SimTest::KnownLaw: {
            plan.kind = s.test == SimTest::TwoPhase ? TestKind::TwoPhase : TestKind::KnownLaw;
            const auto kind = s.test == SimTest::TwoPhase ? ProblemKind::Classification : ProblemKind::Hypothesis;
            const auto rep = report_for(inst, plan.lambdas, kind, out.warnings);
            for (std::size_t j = 0; j < m; ++j) {
                bound[j] = rep.per_hypothesis[j];
                excess[j] = excess_value(inst, plan.lambdas, j, kind);
            }
            break;
        }
        case SimTest::ThresholdBinary: {
            plan.kind = TestKind::ThresholdBinary;
            const auto d = threshold_exponents(inst, s.lambda1, s.lambda2, s.lambda);
            if (!d.note.empty()) out.warnings.push_back(d.note);
            bound = {d.e1, d.e2};
            excess = {binary_f(inst, 0, s.lambda2), binary_f(inst, 1, s.lambda1)};
            break;
        }
        case SimTest::Sequential:
            break;
    }
    // Enumerate first so a size-guard failure leaves no partial output.
    std::vector<ExactResult> exact;
    if (s.exact) {
        for (auto n : plan.n_grid) exact.push_back(exact_enumerate(plan, n));
    }
    const auto results = run_sim(plan);

    std::vector<std::string> header{"n",           "hypothesis",     "trials",         "error_count",
                                    "error_estimate", "reported_error", "wilson_halfwidth", "excess_rate",
                                    "tau_mean",    "exponent_bound", "excess_exponent"};
    if (s.exact) header.insert(header.end(), {"exact_error", "exact_excess"});
    out.table = CsvTable(header);
    for (std::size_t t = 0; t < results.size(); ++t) {
        const auto& r = results[t];
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<std::string> row{fmt(r.n),
                                         fmt(static_cast<std::int64_t>(j + 1)),
                                         fmt(r.trials),
                                         fmt(r.error_count[j]),
                                         fmt(r.per_hypothesis_error[j]),
                                         fmt(r.reported_error[j]),
                                         fmt(r.wilson_halfwidth[j]),
                                         fmt(r.per_hypothesis_excess[j]),
                                         fmt(r.per_hypothesis_tau[j]),
                                         fmt(bound[j]),
                                         fmt(excess[j])};
            if (s.exact) {
                row.push_back(fmt(static_cast<double>(exact[t].per_hypothesis_error[j])));
                row.push_back(fmt(static_cast<double>(exact[t].excess_prob[j])));
            }
            out.table.add(std::move(row));
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        out.summary.push_back(tag("theory", "hypothesis " + std::to_string(j + 1) + " exponent bound " +
                                                fmt(bound[j]) + ", excess exponent " + fmt(excess[j])));
    }
    if (results.size() >= 2) {
        std::vector<std::int64_t> ns;
        for (const auto& r : results) ns.push_back(r.n);
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> p;
            for (const auto& r : results) p.push_back(r.per_hypothesis_error[j]);
            try {
                const auto fit = fit_decay(ns, p);
                out.summary.push_back(tag("simulation", "hypothesis " + std::to_string(j + 1) +
                                                            " fitted error decay " + fmt(fit.slope)));
            } catch (const std::invalid_argument&) {
                out.summary.push_back(tag("simulation", "hypothesis " + std::to_string(j + 1) +
                                                            " too few error events to fit a slope"));
            }
        }
    }
    return out;
}

}  // namespace

ScenarioOutput run_scenario(const ExperimentConfig& config, Scenario scenario,
                            const RunOverrides& overrides) {
    switch (scenario) {
        case Scenario::Exponents: return run_exponents(config);
        case Scenario::TradeoffSweep: return run_tradeoff(config);
        case Scenario::BayesTable: return run_bayes_table(config);
        case Scenario::Simulate: return run_simulate(config, overrides);
        case Scenario::HtCompare: return run_ht_compare(config);
        case Scenario::BinaryCompare: return run_binary_compare(config);
    }
    throw std::logic_error("unknown scenario");
}

}  // namespace exlab::cli
