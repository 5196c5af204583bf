#pragma once

// Error-exponent functions of the two-phase classification and hypothesis
// testing procedures, all evaluated through min_weighted_kl.
//
// Hypothesis indices are 0-based throughout the library.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exlab/divergence.hpp"
#include "exlab/solver.hpp"

namespace exlab {

class ProblemInstance {
public:
    /// Throws std::invalid_argument unless there are at least two pairwise
    /// distinct laws on one alphabet, alpha > 0, k >= 1 and gamma >= 0.
    ProblemInstance(std::vector<Distribution> distributions, double alpha, double k = 1.0,
                    double gamma = 0.0);

    std::size_t hypotheses() const noexcept { return distributions_.size(); }
    std::size_t alphabet_size() const noexcept { return distributions_.front().size(); }
    const Distribution& operator[](std::size_t j) const { return distributions_.at(j); }
    const std::vector<Distribution>& distributions() const noexcept { return distributions_; }

    double alpha() const noexcept { return alpha_; }
    double k() const noexcept { return k_; }
    double gamma() const noexcept { return gamma_; }

    ProblemInstance with_k(double k) const;
    ProblemInstance with_gamma(double gamma) const;
    ProblemInstance with_alpha(double alpha) const;
    ProblemInstance permuted(const std::vector<std::size_t>& order) const;

    /// Defaults to SolverConfig::for_alphabet(alphabet_size()).
    SolverConfig solver;

private:
    std::vector<Distribution> distributions_;
    double alpha_;
    double k_;
    double gamma_;
};

enum class ProblemKind { Classification, Hypothesis };
enum class Regime { FixedLength, Bridged, SequentialApproached };

std::string_view regime_name(Regime regime);
std::string_view kind_name(ProblemKind kind);

struct ExponentReport {
    std::vector<double> per_hypothesis;
    /// Bayesian exponent normalized by the expected stopping time.
    double bayesian = 0.0;
    /// Same exponent normalized by the training length N = n alpha
    /// (classification only; equal to `bayesian` for hypothesis testing).
    double bayesian_per_n = 0.0;
    std::vector<double> lambda_used;
    Regime regime = Regime::Bridged;
    std::string note;
};

/// Minimum value plus the minimizing hypothesis pair (lexicographically
/// smallest on ties) and the optimal tuple.
struct ExponentValue {
    double value = kInf;
    std::size_t i = 0;
    std::size_t l = 0;
    std::vector<Distribution> argmin;
};

/// The display convention pairs the threshold of i with the target P_l; the
/// proof convention pairs the threshold of l with P_l.
enum class Pairing { Display, Proof };

ExponentValue f_exponent_detail(const ProblemInstance& inst, const std::vector<double>& lambdas,
                                std::size_t j, Pairing pairing = Pairing::Display);
double f_exponent(const ProblemInstance& inst, const std::vector<double>& lambdas, std::size_t j);

/// F_j at lambda = 0: the largest excess-length exponent for hypothesis j.
double gamma_bar(const ProblemInstance& inst, std::size_t j);

/// The strict GJS ordering is relaxed to <=; the infimum is unchanged.
ExponentValue l_exponent_detail(const ProblemInstance& inst, std::size_t j);
double l_exponent(const ProblemInstance& inst, std::size_t j);

/// Binary instances only. `i` is 0 or 1; ibar = 1 - i.
double binary_f(const ProblemInstance& inst, std::size_t i, double lambda_bar);
double binary_h(const ProblemInstance& inst, std::size_t i);
double threshold_h(const ProblemInstance& inst, double lambda);

double gamma_exponent(const ProblemInstance& inst, const std::vector<double>& lambdas,
                      std::size_t j);
double omega_exponent(const ProblemInstance& inst, std::size_t j);

bool feasible_lambda(const ProblemInstance& inst, const std::vector<double>& lambdas,
                     ProblemKind kind);

/// Exponents for a fixed threshold vector. Throws std::invalid_argument when
/// the thresholds violate the excess-length target gamma, naming the hypothesis.
ExponentReport two_phase_exponents(const ProblemInstance& inst, const std::vector<double>& lambdas,
                                   ProblemKind kind = ProblemKind::Classification);

/// Maximizes the Bayesian exponent over admissible thresholds.
ExponentReport bayes_optimize(const ProblemInstance& inst, ProblemKind kind);

struct Baselines {
    ExponentReport fixed_length;
    ExponentReport sequential;
};
Baselines baseline_exponents(const ProblemInstance& inst,
                             ProblemKind kind = ProblemKind::Classification);

/// Largest lambda_bar (up to 1e-7) with F(lambda_bar) >= gamma, for the binary
/// threshold test. Returns 0 when even lambda_bar = 0 falls short.
double binary_lambda_for_gamma(const ProblemInstance& inst, std::size_t i, double gamma);

/// Exponent lower bounds of the threshold-based binary test:
/// e1 = min{lambda1, k lambda + gamma}, e2 = min{lambda2, H(k, alpha, lambda) + gamma}.
struct ThresholdDesign {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;
    double e1 = 0.0;
    double e2 = 0.0;
    double bayesian = 0.0;
    std::string note;
};

ThresholdDesign threshold_exponents(const ProblemInstance& inst, double lambda1, double lambda2,
                                    double lambda);

/// Largest admissible lambda1, lambda2 (min_i F_i >= gamma) and the lambda that
/// balances k lambda against H(lambda), to 1e-7.
ThresholdDesign threshold_bayes(const ProblemInstance& inst);

struct AlphaInfResult {
    Distribution q_star1;
    Distribution q_star2;
    Distribution q_prime;
    double e1 = 0.0;
    double e2 = 0.0;
    /// Non-empty when a root was not bracketed and an endpoint was used.
    std::string diagnostic;
};

/// Unlimited-training limit of the threshold-based binary test. Q_i* tilts
/// P_i toward P_ibar until D(Q_i*||P_ibar) = lambda_ibar; Q' tilts P_1 toward
/// P_2 until D(Q'||P_1) = lambda.
AlphaInfResult alpha_inf_closed_forms(const Distribution& p1, const Distribution& p2,
                                      double lambda1, double lambda2, double lambda, double k,
                                      double gamma);

/// s in [0, 1] with D(tilt(p0, p1, s) || p0) = target, by bisection.
/// Returns 1 when target >= D(p1||p0).
double tilt_root(const Distribution& p0, const Distribution& p1, double target);

}  // namespace exlab
