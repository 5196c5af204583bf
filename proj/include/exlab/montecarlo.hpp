#pragma once

// Seeded simulation of the decision procedures and an exact type-class
// enumeration for small instances.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exlab/exponents.hpp"
#include "exlab/procedures.hpp"

namespace exlab {

/// Philox4x32-10 counter-based generator.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// Uniform stream for one substream. The key is the 64-bit seed; the counter
/// carries the three substream words and a running block index.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint32_t c) noexcept;

    /// (x + 0.5) / 2^32 for the next 32-bit word: never 0, never 1.
    double uniform() noexcept;
    void fill_uniform(double* out, std::size_t count) noexcept;

private:
    Philox4x32::Key key_;
    Philox4x32::Counter counter_;
    Philox4x32::Counter buffer_{};
    unsigned used_ = 4;
};

/// Inverse-CDF sampler for one law. Symbols of zero probability are never drawn.
class SymbolSampler {
public:
    explicit SymbolSampler(const Distribution& law);

    int draw(RandomStream& rng) const noexcept;
    /// Counts of `length` independent draws.
    std::vector<std::int64_t> counts(RandomStream& rng, std::int64_t length) const;

private:
    std::vector<double> thresholds_;
};

enum class TestKind { TwoPhase, ThresholdBinary, KnownLaw };

struct SimPlan {
    explicit SimPlan(ProblemInstance inst) : instance(std::move(inst)) {}

    ProblemInstance instance;
    TestKind kind = TestKind::TwoPhase;
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
    std::vector<std::int64_t> n_grid;
    /// Per-hypothesis thresholds for TwoPhase and KnownLaw.
    std::vector<double> lambdas;
    /// Thresholds of the binary threshold test.
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;
    /// 0 picks EXLAB_THREADS, then the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

inline constexpr double kZ95 = 1.959964;
inline constexpr double kZ95OneSided = 1.645;

/// Wilson score interval for `events` out of `trials`.
Interval wilson_interval(std::int64_t events, std::int64_t trials, double z = kZ95);

struct SimResult {
    std::int64_t n = 0;
    std::int64_t trials = 0;
    std::vector<std::int64_t> error_count;
    std::vector<double> per_hypothesis_error;
    /// Estimate, or the one-sided 95% Wilson upper bound for zero-count cells.
    std::vector<double> reported_error;
    std::vector<double> wilson_halfwidth;
    std::vector<std::int64_t> excess_count;
    std::vector<double> per_hypothesis_excess;
    std::vector<double> per_hypothesis_tau;
    /// Pooled over hypotheses.
    double excess_rate = 0.0;
    double mean_tau = 0.0;
};

/// One result per n. Bit-identical for any thread count.
std::vector<SimResult> run_sim(const SimPlan& plan);

struct ExactResult {
    std::int64_t n = 0;
    std::vector<long double> per_hypothesis_error;
    std::vector<long double> excess_prob;
};

class SizeGuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kEnumerationLimit = 1e7;

/// Number of joint type tuples exact_enumerate would visit per hypothesis.
double enumeration_size(const SimPlan& plan, std::int64_t n);

/// Exact error and excess probabilities, summed over joint types. Uses the
/// plan's instance, kind and thresholds. Throws SizeGuardError above
/// kEnumerationLimit.
ExactResult exact_enumerate(const SimPlan& plan, std::int64_t n);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<std::int64_t> used;
    std::vector<std::int64_t> excluded;
};

/// Least-squares fit of -log(p) = intercept + slope * n over points with
/// p > 0. Throws std::invalid_argument with fewer than two usable points.
DecayFit fit_decay(const std::vector<std::int64_t>& n, const std::vector<double>& p);

/// Per-hypothesis decay rates of the error estimates.
std::vector<DecayFit> slope_fit(const std::vector<SimResult>& results);
/// Per-hypothesis decay rates of the phase-2 entry frequency.
std::vector<DecayFit> excess_slope_fit(const std::vector<SimResult>& results);

struct SequentialSimResult {
    double beta = 0.0;
    std::int64_t trials = 0;
    std::vector<double> per_hypothesis_error;
    std::vector<double> mean_tau;
    std::int64_t truncated = 0;
};

/// Sequential test with training ratio inst.alpha(); each trial draws fresh
/// streams. `tag` separates the substreams of different calls on one seed.
SequentialSimResult run_sequential_sim(const ProblemInstance& inst, double beta,
                                       std::int64_t trials, std::uint64_t seed,
                                       std::uint32_t tag = 0, unsigned threads = 0,
                                       std::int64_t max_steps = 1000000);

/// Worker count: explicit value, else EXLAB_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace exlab
