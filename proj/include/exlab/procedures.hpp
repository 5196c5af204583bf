#pragma once

// Decision procedures: Gutman's fixed-length test, the sequential test with a
// universality threshold, the nearest-neighbour two-phase test, the
// threshold-based binary two-phase test and the known-law two-phase test.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exlab/divergence.hpp"

namespace exlab {

class TestDecision {
public:
    enum class Kind : std::uint8_t { Hypothesis, Reject, Truncated };

    static TestDecision hypothesis(std::size_t j) { return {Kind::Hypothesis, j}; }
    static TestDecision reject() { return {Kind::Reject, 0}; }
    static TestDecision truncated() { return {Kind::Truncated, 0}; }

    Kind kind() const noexcept { return kind_; }
    bool is_hypothesis() const noexcept { return kind_ == Kind::Hypothesis; }
    /// 0-based hypothesis index; only meaningful when is_hypothesis().
    std::size_t index() const noexcept { return index_; }

    friend bool operator==(const TestDecision&, const TestDecision&) = default;

private:
    TestDecision(Kind kind, std::size_t index) : kind_(kind), index_(index) {}
    Kind kind_;
    std::size_t index_;
};

struct TestOutcome {
    TestDecision decision = TestDecision::reject();
    std::int64_t tau = 0;
    /// 1 or 2 for two-phase tests, 0 otherwise.
    int phase = 0;
    std::vector<double> scores;
    /// Sequential test stopped with every score above the threshold.
    bool all_rejected = false;
};

/// ceil(x) that ignores floating-point noise just above an integer.
std::int64_t ceil_length(double x);

struct TwoPhaseConfig {
    std::int64_t n = 1;
    double k = 1.0;
    double alpha = 1.0;
    std::vector<double> lambdas;

    std::int64_t training_length() const { return ceil_length(static_cast<double>(n) * alpha); }
    std::int64_t full_length() const { return ceil_length(k * static_cast<double>(n)); }
    void validate(std::size_t hypotheses) const;
};

struct SequentialConfig {
    double beta = 0.01;
    double alpha = 1.0;
    std::int64_t max_steps = 1000000;

    void validate() const;
};

/// Three-branch rule with a reject option. Training types must have length
/// ceil(n alpha).
TestDecision gutman_test(std::span<const EmpiricalType> training, const EmpiricalType& test,
                         double lambda, double alpha);

/// -log(beta(|X|-1))/n + 2|X| log(n+1)/n + |X| log(n alpha + 1)/n
double g_threshold(double beta, std::int64_t n, double alpha, std::size_t alphabet_size);

/// Resumable sequential test. At step k the caller supplies the training
/// symbols that bring every source to ceil(alpha k) and one test symbol.
class SequentialTest {
public:
    SequentialTest(std::size_t hypotheses, std::size_t alphabet_size, SequentialConfig config);

    std::int64_t step_index() const noexcept { return k_; }
    /// Training symbols each source must supply for the next step.
    std::int64_t training_needed() const;
    /// Advances one step. Returns true once the test has stopped.
    bool step(std::span<const std::vector<int>> new_training, int test_symbol);
    bool stopped() const noexcept { return stopped_; }
    const TestOutcome& outcome() const noexcept { return outcome_; }

private:
    std::size_t m_;
    std::size_t alphabet_;
    SequentialConfig config_;
    std::vector<std::vector<std::int64_t>> training_counts_;
    std::vector<std::int64_t> test_counts_;
    std::int64_t training_len_ = 0;
    std::int64_t k_ = 0;
    bool stopped_ = false;
    TestOutcome outcome_;
};

using SymbolSource = std::function<int()>;

/// Runs the sequential test to completion. Exceeding max_steps yields a
/// Truncated decision.
TestOutcome sequential_test(std::span<SymbolSource> training, SymbolSource& test,
                            std::size_t alphabet_size, const SequentialConfig& config);

/// Two-phase NN test on types: `head` is the type of the first n test symbols,
/// `full` that of all ceil(kn). `full` is consulted only in phase 2. Never rejects.
TestOutcome two_phase_decide(std::span<const EmpiricalType> training, const EmpiricalType& head,
                             const EmpiricalType& full, const TwoPhaseConfig& config);

/// Same test on raw sequences. `test_full` must hold ceil(kn) symbols.
TestOutcome two_phase_test(std::span<const std::vector<int>> training,
                           std::span<const int> test_full, std::size_t alphabet_size,
                           const TwoPhaseConfig& config);

struct ThresholdBinaryConfig {
    std::int64_t n = 1;
    double k = 1.0;
    double alpha = 1.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;

    std::int64_t training_length() const { return ceil_length(static_cast<double>(n) * alpha); }
    std::int64_t full_length() const { return ceil_length(k * static_cast<double>(n)); }
    void validate() const;
};

/// The second phase scores with ratio alpha / k.
TestOutcome threshold_two_phase_binary_decide(std::span<const EmpiricalType> training,
                                              const EmpiricalType& head, const EmpiricalType& full,
                                              const ThresholdBinaryConfig& config);
TestOutcome threshold_two_phase_binary(std::span<const std::vector<int>> training,
                                       std::span<const int> test_full, std::size_t alphabet_size,
                                       const ThresholdBinaryConfig& config);

/// Known-law variant: scores are D(T || P_i); stops at n iff every score other
/// than the smallest strictly exceeds its threshold.
TestOutcome two_phase_ht_decide(std::span<const Distribution> laws, const EmpiricalType& head,
                                const EmpiricalType& full, double k,
                                std::span<const double> lambdas);
TestOutcome two_phase_ht(std::span<const Distribution> laws, std::span<const int> test_full,
                         std::int64_t n, double k, std::span<const double> lambdas);

}  // namespace exlab
