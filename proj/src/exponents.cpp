#include "exlab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace exlab {

ProblemInstance::ProblemInstance(std::vector<Distribution> distributions, double alpha, double k,
                                 double gamma)
    : solver(), distributions_(std::move(distributions)), alpha_(alpha), k_(k), gamma_(gamma) {
    if (distributions_.size() < 2) {
        throw std::invalid_argument("a problem instance needs at least two distributions");
    }
    for (const auto& d : distributions_) {
        require_same_alphabet(distributions_.front().size(), d.size());
    }
    for (std::size_t a = 0; a < distributions_.size(); ++a) {
        for (std::size_t b = a + 1; b < distributions_.size(); ++b) {
            if (distributions_[a] == distributions_[b]) {
                throw std::invalid_argument("distributions must be distinct (P" +
                                            std::to_string(a + 1) + " equals P" +
                                            std::to_string(b + 1) + ")");
            }
        }
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be positive and finite");
    }
    if (!(k >= 1.0) || !std::isfinite(k)) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("gamma must be non-negative");
    }
    solver = SolverConfig::for_alphabet(alphabet_size());
}

ProblemInstance ProblemInstance::with_k(double k) const {
    ProblemInstance out(distributions_, alpha_, k, gamma_);
    out.solver = solver;
    return out;
}

ProblemInstance ProblemInstance::with_gamma(double gamma) const {
    ProblemInstance out(distributions_, alpha_, k_, gamma);
    out.solver = solver;
    return out;
}

ProblemInstance ProblemInstance::with_alpha(double alpha) const {
    ProblemInstance out(distributions_, alpha, k_, gamma_);
    out.solver = solver;
    return out;
}

ProblemInstance ProblemInstance::permuted(const std::vector<std::size_t>& order) const {
    if (order.size() != hypotheses()) {
        throw std::invalid_argument("permutation length must equal the number of hypotheses");
    }
    std::vector<Distribution> d;
    for (std::size_t j : order) {
        d.push_back(distributions_.at(j));
    }
    ProblemInstance out(std::move(d), alpha_, k_, gamma_);
    out.solver = solver;
    return out;
}

std::string_view regime_name(Regime regime) {
    switch (regime) {
        case Regime::FixedLength:
            return "fixed-length";
        case Regime::Bridged:
            return "bridged";
        case Regime::SequentialApproached:
            return "sequential-approached";
    }
    return "bridged";
}

std::string_view kind_name(ProblemKind kind) {
    return kind == ProblemKind::Classification ? "classification" : "hypothesis";
}

namespace {

void check_index(const ProblemInstance& inst, std::size_t j) {
    if (j >= inst.hypotheses()) {
        throw std::invalid_argument("hypothesis index " + std::to_string(j) + " out of range");
    }
}

void check_lambdas(const ProblemInstance& inst, const std::vector<double>& lambdas) {
    if (lambdas.size() != inst.hypotheses()) {
        throw std::invalid_argument("threshold vector must have one entry per hypothesis");
    }
    for (double v : lambdas) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("thresholds must be non-negative");
        }
    }
}

void check_binary(const ProblemInstance& inst, std::size_t i) {
    if (inst.hypotheses() != 2) {
        throw std::invalid_argument("binary exponents need exactly two distributions");
    }
    if (i > 1) {
        throw std::invalid_argument("binary hypothesis index must be 0 or 1");
    }
}

MinResult solve(const ProblemInstance& inst, const std::vector<Distribution>& targets,
                const std::vector<double>& weights, const std::vector<Constraint>& constraints) {
    return min_weighted_kl(targets, weights, constraints, inst.solver);
}

double solved_value(const MinResult& r, const char* what) {
    if (!r.feasible) {
        throw std::runtime_error(std::string("solver found no feasible point for ") + what);
    }
    return r.value;
}

double min_gjs_to(const ProblemInstance& inst, std::size_t j) {
    double best = kInf;
    for (std::size_t t = 0; t < inst.hypotheses(); ++t) {
        if (t != j) {
            best = std::min(best, gjs(inst[t], inst[j], inst.alpha()));
        }
    }
    return best;
}

double min_kl_from(const ProblemInstance& inst, std::size_t j) {
    double best = kInf;
    for (std::size_t t = 0; t < inst.hypotheses(); ++t) {
        if (t != j) {
            best = std::min(best, kl(inst[j], inst[t]));
        }
    }
    return best;
}

// Is there Q with D(Q||P_i) <= li and D(Q||P_l) <= ll? The Pareto front of the
// two divergences is the tilted family between P_i and P_l.
bool kl_pair_feasible(const Distribution& pi, const Distribution& pl, double li, double ll) {
    if (kl(pi, pl) <= ll) {
        return true;
    }
    if (kl(pl, pi) <= li) {
        return true;
    }
    if (li <= 0.0 || ll <= 0.0) {
        return false;
    }
    double s = 0.0;
    try {
        s = tilt_root(pi, pl, li);
        return kl(tilt(pi, pl, s), pl) <= ll;
    } catch (const std::invalid_argument&) {
        return false;
    }
}

}  // namespace

double tilt_root(const Distribution& p0, const Distribution& p1, double target) {
    require_same_alphabet(p0.size(), p1.size());
    if (!(target >= 0.0)) {
        throw std::invalid_argument("tilt target must be non-negative");
    }
    if (target == 0.0) {
        return 0.0;
    }
    if (kl(p1, p0) <= target) {
        return 1.0;
    }
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (kl(tilt(p0, p1, mid), p0) <= target ? lo : hi) = mid;
    }
    return lo;
}

ExponentValue f_exponent_detail(const ProblemInstance& inst, const std::vector<double>& lambdas,
                                std::size_t j, Pairing pairing) {
    check_index(inst, j);
    check_lambdas(inst, lambdas);
    const double a = inst.alpha();
    const std::size_t m = inst.hypotheses();
    ExponentValue best;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < m; ++l) {
            if (i == l) {
                continue;
            }
            // Swapping (i,l) and (Q1,Q2) maps the display problem onto itself.
            if (pairing == Pairing::Display && l < i) {
                continue;
            }
            const double b1 = pairing == Pairing::Display ? lambdas[i] : lambdas[l];
            const double b2 = pairing == Pairing::Display ? lambdas[l] : lambdas[i];
            const std::vector<Distribution> targets{inst[l], inst[i], inst[j]};
            const std::vector<double> weights{a, a, 1.0};
            const std::vector<Constraint> cons{Constraint::gjs_at_most(0, 2, a, b1),
                                               Constraint::gjs_at_most(1, 2, a, b2)};
            const auto r = solve(inst, targets, weights, cons);
            const double v = solved_value(r, "F_j");
            if (v < best.value) {
                best.value = v;
                best.i = i;
                best.l = l;
                best.argmin = r.argmin;
            }
            if (best.value == 0.0) {
                return best;
            }
        }
    }
    return best;
}

double f_exponent(const ProblemInstance& inst, const std::vector<double>& lambdas, std::size_t j) {
    return f_exponent_detail(inst, lambdas, j).value;
}

double gamma_bar(const ProblemInstance& inst, std::size_t j) {
    return f_exponent(inst, std::vector<double>(inst.hypotheses(), 0.0), j);
}

ExponentValue l_exponent_detail(const ProblemInstance& inst, std::size_t j) {
    check_index(inst, j);
    const double a = inst.alpha();
    ExponentValue best;
    for (std::size_t i = 0; i < inst.hypotheses(); ++i) {
        if (i == j) {
            continue;
        }
        const std::vector<Distribution> targets{inst[i], inst[j], inst[j]};
        const std::vector<double> weights{a, a, inst.k()};
        const std::vector<Constraint> cons{Constraint::gjs_order(0, 1, 2, a)};
        const auto r = solve(inst, targets, weights, cons);
        const double v = solved_value(r, "L_j");
        if (v < best.value) {
            best.value = v;
            best.i = i;
            best.l = j;
            best.argmin = r.argmin;
        }
    }
    return best;
}

double l_exponent(const ProblemInstance& inst, std::size_t j) {
    return l_exponent_detail(inst, j).value;
}

double binary_f(const ProblemInstance& inst, std::size_t i, double lambda_bar) {
    check_binary(inst, i);
    if (!(lambda_bar >= 0.0)) {
        throw std::invalid_argument("threshold must be non-negative");
    }
    const std::size_t ib = 1 - i;
    const double a = inst.alpha();
    const std::vector<Distribution> targets{inst[ib], inst[i]};
    const std::vector<double> weights{a, 1.0};
    const std::vector<Constraint> cons{Constraint::gjs_at_most(0, 1, a, lambda_bar)};
    return solved_value(solve(inst, targets, weights, cons), "binary F");
}

double binary_h(const ProblemInstance& inst, std::size_t i) {
    check_binary(inst, i);
    return l_exponent(inst, i);
}

double threshold_h(const ProblemInstance& inst, double lambda) {
    check_binary(inst, 0);
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("threshold must be non-negative");
    }
    const double a = inst.alpha();
    const std::vector<Distribution> targets{inst[0], inst[1]};
    const std::vector<double> weights{a, inst.k()};
    const std::vector<Constraint> cons{Constraint::gjs_at_most(0, 1, a, lambda)};
    return solved_value(solve(inst, targets, weights, cons), "threshold H");
}

double gamma_exponent(const ProblemInstance& inst, const std::vector<double>& lambdas,
                      std::size_t j) {
    check_index(inst, j);
    check_lambdas(inst, lambdas);
    const std::size_t m = inst.hypotheses();
    double best = kInf;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = i + 1; l < m; ++l) {
            if (!kl_pair_feasible(inst[i], inst[l], lambdas[i], lambdas[l])) {
                continue;
            }
            double v = kInf;
            if (lambdas[i] == 0.0 || lambdas[l] == 0.0) {
                // A zero-radius ball pins Q to its centre.
                const Distribution& q = lambdas[i] == 0.0 ? inst[i] : inst[l];
                v = kl(q, inst[j]);
            } else {
                const std::vector<Distribution> targets{inst[j]};
                const std::vector<double> weights{1.0};
                const std::vector<Constraint> cons{
                    Constraint::kl_at_most(0, inst[i], lambdas[i]),
                    Constraint::kl_at_most(0, inst[l], lambdas[l])};
                v = solved_value(solve(inst, targets, weights, cons), "Gamma_j");
            }
            best = std::min(best, v);
            if (best == 0.0) {
                return best;
            }
        }
    }
    return best;
}

double omega_exponent(const ProblemInstance& inst, std::size_t j) {
    check_index(inst, j);
    double best = kInf;
    for (std::size_t i = 0; i < inst.hypotheses(); ++i) {
        if (i == j) {
            continue;
        }
        const std::vector<Distribution> targets{inst[j]};
        const std::vector<double> weights{1.0};
        const std::vector<Constraint> cons{Constraint::kl_order(0, inst[i], inst[j])};
        best = std::min(best, solved_value(solve(inst, targets, weights, cons), "Omega_j"));
    }
    return best;
}

bool feasible_lambda(const ProblemInstance& inst, const std::vector<double>& lambdas,
                     ProblemKind kind) {
    check_lambdas(inst, lambdas);
    if (kind == ProblemKind::Classification) {
        return true;
    }
    for (std::size_t i = 0; i < inst.hypotheses(); ++i) {
        for (std::size_t l = i + 1; l < inst.hypotheses(); ++l) {
            if (kl_pair_feasible(inst[i], inst[l], lambdas[i], lambdas[l])) {
                return true;
            }
        }
    }
    return false;
}

namespace {

double excess_exponent(const ProblemInstance& inst, const std::vector<double>& lambdas,
                       std::size_t j, ProblemKind kind) {
    return kind == ProblemKind::Classification ? f_exponent(inst, lambdas, j)
                                               : gamma_exponent(inst, lambdas, j);
}

// Second-phase exponent plus gamma for each hypothesis.
std::vector<double> phase_two_caps(const ProblemInstance& inst, ProblemKind kind) {
    std::vector<double> caps;
    for (std::size_t j = 0; j < inst.hypotheses(); ++j) {
        const double e = kind == ProblemKind::Classification ? l_exponent(inst, j)
                                                             : inst.k() * omega_exponent(inst, j);
        caps.push_back(e + inst.gamma());
    }
    return caps;
}

double per_n_factor(const ProblemInstance& inst, ProblemKind kind) {
    return kind == ProblemKind::Classification ? 1.0 / inst.alpha() : 1.0;
}

ExponentReport fixed_length_report(const ProblemInstance& inst, ProblemKind kind) {
    ExponentReport rep;
    rep.regime = Regime::FixedLength;
    rep.lambda_used.assign(inst.hypotheses(), 0.0);
    if (kind == ProblemKind::Classification) {
        double lbar = kInf;
        for (std::size_t i = 0; i < inst.hypotheses(); ++i) {
            for (std::size_t j = 0; j < inst.hypotheses(); ++j) {
                if (i != j) {
                    lbar = std::min(lbar, gjs(inst[i], inst[j], inst.alpha()));
                }
            }
        }
        rep.per_hypothesis.assign(inst.hypotheses(), lbar);
        rep.note = "fixed-length regime: Gutman exponent min GJS over distinct pairs";
    } else {
        for (std::size_t j = 0; j < inst.hypotheses(); ++j) {
            rep.per_hypothesis.push_back(omega_exponent(inst, j));
        }
        rep.note = "fixed-length regime: per-hypothesis Chernoff exponent";
    }
    rep.bayesian = *std::min_element(rep.per_hypothesis.begin(), rep.per_hypothesis.end());
    rep.bayesian_per_n = rep.bayesian * per_n_factor(inst, kind);
    return rep;
}

std::vector<double> sequential_values(const ProblemInstance& inst, ProblemKind kind) {
    std::vector<double> out;
    for (std::size_t j = 0; j < inst.hypotheses(); ++j) {
        out.push_back(kind == ProblemKind::Classification ? min_gjs_to(inst, j)
                                                          : min_kl_from(inst, j));
    }
    return out;
}

Regime classify(const ProblemInstance& inst, const std::vector<double>& per_j, ProblemKind kind) {
    const auto seq = sequential_values(inst, kind);
    for (std::size_t j = 0; j < per_j.size(); ++j) {
        if (per_j[j] < 0.99 * seq[j]) {
            return Regime::Bridged;
        }
    }
    return Regime::SequentialApproached;
}

bool all_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

ExponentReport two_phase_exponents(const ProblemInstance& inst, const std::vector<double>& lambdas,
                                   ProblemKind kind) {
    check_lambdas(inst, lambdas);
    if (all_zero(lambdas) || !feasible_lambda(inst, lambdas, kind)) {
        auto rep = fixed_length_report(inst, kind);
        rep.lambda_used = lambdas;
        return rep;
    }
    for (std::size_t j = 0; j < inst.hypotheses(); ++j) {
        const double e = excess_exponent(inst, lambdas, j, kind);
        if (e < inst.gamma()) {
            throw std::invalid_argument(
                "thresholds miss the excess-length target: hypothesis " + std::to_string(j + 1) +
                " has exponent " + std::to_string(e) + " < gamma " + std::to_string(inst.gamma()));
        }
    }
    const auto caps = phase_two_caps(inst, kind);
    ExponentReport rep;
    rep.lambda_used = lambdas;
    for (std::size_t j = 0; j < inst.hypotheses(); ++j) {
        rep.per_hypothesis.push_back(std::min(lambdas[j], caps[j]));
    }
    rep.bayesian = *std::min_element(rep.per_hypothesis.begin(), rep.per_hypothesis.end());
    rep.bayesian_per_n = rep.bayesian * per_n_factor(inst, kind);
    rep.regime = classify(inst, rep.per_hypothesis, kind);
    return rep;
}

ExponentReport bayes_optimize(const ProblemInstance& inst, ProblemKind kind) {
    const std::size_t m = inst.hypotheses();
    auto min_excess = [&](double v) {
        const std::vector<double> lam(m, v);
        if (kind == ProblemKind::Hypothesis && !feasible_lambda(inst, lam, kind)) {
            return kInf;
        }
        double e = kInf;
        for (std::size_t j = 0; j < m && e >= inst.gamma(); ++j) {
            e = std::min(e, excess_exponent(inst, lam, j, kind));
        }
        return e;
    };
    const auto caps = phase_two_caps(inst, kind);
    const double cap = *std::min_element(caps.begin(), caps.end());

    // Thresholds at or beyond the sequential values make some excess exponent vanish.
    const auto seq = sequential_values(inst, kind);
    double hi = std::min(cap, *std::max_element(seq.begin(), seq.end()));
    double v = 0.0;
    if (min_excess(hi) >= inst.gamma()) {
        v = hi;
    } else {
        double lo = 0.0;
        if (kind == ProblemKind::Classification && min_excess(0.0) < inst.gamma()) {
            auto rep = fixed_length_report(inst, kind);
            rep.note += "; gamma exceeds every admissible excess-length exponent";
            return rep;
        }
        while (hi - lo > 1e-7) {
            const double mid = 0.5 * (lo + hi);
            (min_excess(mid) >= inst.gamma() ? lo : hi) = mid;
        }
        v = lo;
    }
    if (v == 0.0) {
        // Only the all-zero vector is admissible: the test never enters phase 2.
        auto rep = fixed_length_report(inst, kind);
        rep.note += "; only zero thresholds are admissible";
        return rep;
    }
    ExponentReport rep;
    rep.lambda_used.assign(m, v);
    for (std::size_t j = 0; j < m; ++j) {
        rep.per_hypothesis.push_back(std::min(v, caps[j]));
    }
    rep.bayesian = *std::min_element(rep.per_hypothesis.begin(), rep.per_hypothesis.end());
    rep.regime = classify(inst, rep.per_hypothesis, kind);
    if (kind == ProblemKind::Hypothesis) {
        const auto fixed = fixed_length_report(inst, kind);
        if (!feasible_lambda(inst, rep.lambda_used, kind) || fixed.bayesian > rep.bayesian) {
            auto out = fixed;
            out.note += "; exceeds the best admissible two-phase value";
            return out;
        }
    }
    rep.bayesian_per_n = rep.bayesian * per_n_factor(inst, kind);
    rep.note = "uniform thresholds are optimal for the Bayesian objective";
    return rep;
}

Baselines baseline_exponents(const ProblemInstance& inst, ProblemKind kind) {
    Baselines b;
    b.fixed_length = fixed_length_report(inst, kind);
    b.sequential.per_hypothesis = sequential_values(inst, kind);
    b.sequential.lambda_used = b.sequential.per_hypothesis;
    b.sequential.bayesian =
        *std::min_element(b.sequential.per_hypothesis.begin(), b.sequential.per_hypothesis.end());
    b.sequential.bayesian_per_n = b.sequential.bayesian * per_n_factor(inst, kind);
    b.sequential.regime = Regime::SequentialApproached;
    b.sequential.note = kind == ProblemKind::Classification
                            ? "sequential: min GJS(P_i, P_j) over i != j"
                            : "sequential: min D(P_j || P_l) over l != j";
    return b;
}

double binary_lambda_for_gamma(const ProblemInstance& inst, std::size_t i, double gamma) {
    check_binary(inst, i);
    if (binary_f(inst, i, 0.0) < gamma) {
        return 0.0;
    }
    const std::size_t ib = 1 - i;
    double lo = 0.0, hi = gjs(inst[ib], inst[i], inst.alpha());
    while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        (binary_f(inst, i, mid) >= gamma ? lo : hi) = mid;
    }
    return lo;
}

ThresholdDesign threshold_exponents(const ProblemInstance& inst, double lambda1, double lambda2,
                                    double lambda) {
    check_binary(inst, 0);
    if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda >= 0.0)) {
        throw std::invalid_argument("thresholds must be non-negative");
    }
    ThresholdDesign d;
    d.lambda1 = lambda1;
    d.lambda2 = lambda2;
    d.lambda = lambda;
    if (binary_f(inst, 0, lambda2) < inst.gamma() || binary_f(inst, 1, lambda1) < inst.gamma()) {
        d.note = "thresholds violate the excess-length target";
    }
    const double g = inst.gamma();
    d.e1 = std::min(lambda1, inst.k() * lambda + g);
    d.e2 = std::min(lambda2, threshold_h(inst, lambda) + g);
    d.bayesian = std::min(d.e1, d.e2);
    return d;
}

ThresholdDesign threshold_bayes(const ProblemInstance& inst) {
    check_binary(inst, 0);
    const double l1 = binary_lambda_for_gamma(inst, 1, inst.gamma());
    const double l2 = binary_lambda_for_gamma(inst, 0, inst.gamma());
    if (l2 == 0.0) {
        ThresholdDesign d;
        d.e1 = d.e2 = d.bayesian = fixed_length_report(inst, ProblemKind::Classification).bayesian;
        d.note = "lambda2 = 0: reduces to the fixed-length test";
        return d;
    }
    double lo = 0.0, hi = gjs(inst[0], inst[1], inst.alpha());
    while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        (inst.k() * mid < threshold_h(inst, mid) ? lo : hi) = mid;
    }
    auto a = threshold_exponents(inst, l1, l2, lo);
    const auto b = threshold_exponents(inst, l1, l2, hi);
    return b.bayesian > a.bayesian ? b : a;
}

AlphaInfResult alpha_inf_closed_forms(const Distribution& p1, const Distribution& p2,
                                      double lambda1, double lambda2, double lambda, double k,
                                      double gamma) {
    require_same_alphabet(p1.size(), p2.size());
    if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda >= 0.0)) {
        throw std::invalid_argument("thresholds must be non-negative");
    }
    if (!(k >= 1.0)) {
        throw std::invalid_argument("k must be at least 1");
    }
    std::string diag;
    auto endpoint_note = [&](const char* name, double target, double reach) {
        if (target >= reach) {
            if (!diag.empty()) {
                diag += "; ";
            }
            diag += std::string(name) + " threshold " + std::to_string(target) +
                    " reaches the unconstrained endpoint " + std::to_string(reach);
        }
    };
    // Q_1* tilts P_2 toward P_1 keeping D(.||P_2) = lambda_2, and symmetrically.
    endpoint_note("lambda2", lambda2, kl(p1, p2));
    endpoint_note("lambda1", lambda1, kl(p2, p1));
    endpoint_note("lambda", lambda, kl(p2, p1));
    AlphaInfResult r{tilt(p2, p1, tilt_root(p2, p1, lambda2)),
                     tilt(p1, p2, tilt_root(p1, p2, lambda1)),
                     tilt(p1, p2, tilt_root(p1, p2, lambda)), 0.0, 0.0, diag};
    r.e1 = std::min(kl(r.q_star2, p1), k * kl(r.q_prime, p1) + gamma);
    r.e2 = std::min(kl(r.q_star1, p2), k * kl(r.q_prime, p2) + gamma);
    return r;
}

}  // namespace exlab
