#pragma once

// Constrained minimization of weighted KL sums over products of simplices:
//
//   minimize   sum_t w_t D(Q_t || target_t)
//   subject to GJS / KL inequality constraints between the Q_t.
//
// Every exponent function in exponents.hpp is one call to min_weighted_kl.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "exlab/divergence.hpp"

namespace exlab {

struct SolverConfig {
    /// Finest lattice spacing used to seed the local refinement.
    double grid_step = 0.01;
    /// Stationarity and feasibility tolerance of the refinement.
    double refine_tol = 1e-10;
    int max_refine_iters = 200;
    /// Upper bound on the number of lattice tuples scored when seeding.
    std::size_t lattice_budget = 400000;
    /// Number of lattice seeds that get refined.
    std::size_t seeds = 6;

    /// Throws std::invalid_argument unless 0 < grid_step <= 0.1 and refine_tol > 0.
    void validate() const;

    /// 0.01 for alphabets of at most three symbols, 0.02 for four, 0.05 above.
    static SolverConfig for_alphabet(std::size_t alphabet_size);
};

struct Constraint {
    enum class Kind {
        GjsAtMost,  // gjs(Q_a, Q_b, alpha) <= bound
        KlAtMost,   // D(Q_a || ref) <= bound
        GjsOrder,   // gjs(Q_a, Q_c, alpha) <= gjs(Q_b, Q_c, alpha)
        KlOrder,    // D(Q_a || ref) <= D(Q_a || ref2)
    };

    Kind kind = Kind::GjsAtMost;
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t c = 0;
    double alpha = 1.0;
    double bound = 0.0;
    std::optional<Distribution> ref;
    std::optional<Distribution> ref2;

    static Constraint gjs_at_most(std::size_t a, std::size_t b, double alpha, double bound);
    static Constraint kl_at_most(std::size_t a, Distribution ref, double bound);
    static Constraint gjs_order(std::size_t closer, std::size_t farther, std::size_t anchor,
                                double alpha);
    static Constraint kl_order(std::size_t a, Distribution closer, Distribution farther);
};

struct MinResult {
    /// kInf when no feasible point was found.
    double value = kInf;
    std::vector<Distribution> argmin;
    /// Largest constraint violation at argmin (0 when strictly feasible).
    double violation = 0.0;
    bool feasible = false;
};

/// Lattice-seeded multi-start refinement. Returns the unconstrained optimum
/// (Q_t = target_t, value 0) when it is feasible. Throws std::invalid_argument
/// on inconsistent dimensions or variable indices.
MinResult min_weighted_kl(std::span<const Distribution> targets, std::span<const double> weights,
                          std::span<const Constraint> constraints,
                          const SolverConfig& config = {});

/// Value of the objective and the largest violation at a given tuple.
struct PointEvaluation {
    double objective = 0.0;
    double violation = 0.0;
};
PointEvaluation evaluate_point(std::span<const Distribution> targets,
                               std::span<const double> weights,
                               std::span<const Constraint> constraints,
                               std::span<const Distribution> point);

}  // namespace exlab
