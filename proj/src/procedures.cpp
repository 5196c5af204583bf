#include "exlab/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exlab/kernels.hpp"

namespace exlab {

std::int64_t ceil_length(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("length must be finite and non-negative");
    }
    return static_cast<std::int64_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

void TwoPhaseConfig::validate(std::size_t hypotheses) const {
    if (n <= 0) {
        throw std::invalid_argument("n must be positive");
    }
    if (!(k >= 1.0)) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("alpha must be positive");
    }
    if (lambdas.size() != hypotheses) {
        throw std::invalid_argument("one threshold per hypothesis is required");
    }
    for (double v : lambdas) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("thresholds must be non-negative");
        }
    }
}

void SequentialConfig::validate() const {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("beta must lie in (0, 1)");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("alpha must be positive");
    }
    if (max_steps <= 0) {
        throw std::invalid_argument("max_steps must be positive");
    }
}

void ThresholdBinaryConfig::validate() const {
    if (n <= 0) {
        throw std::invalid_argument("n must be positive");
    }
    if (!(k >= 1.0)) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("alpha must be positive");
    }
    if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda >= 0.0)) {
        throw std::invalid_argument("thresholds must be non-negative");
    }
}

namespace {

std::vector<double> frequencies(const EmpiricalType& t) {
    std::vector<double> f(t.alphabet_size());
    t.fill_frequencies(f);
    return f;
}

std::vector<double> gjs_scores(std::span<const EmpiricalType> training, const EmpiricalType& test,
                               double alpha) {
    const auto ty = frequencies(test);
    std::vector<double> scores;
    scores.reserve(training.size());
    for (const auto& t : training) {
        require_same_alphabet(t.alphabet_size(), test.alphabet_size());
        scores.push_back(gjs(frequencies(t), ty, alpha));
    }
    return scores;
}

// Scores that agree to within rounding count as tied so that mathematically
// equal scores (mirror-image types, say) go to the lowest index.
std::size_t tie_break(const std::vector<double>& values, const std::uint8_t* mask, std::size_t best) {
    const double slack = 1e-12 * std::max(1.0, std::abs(values[best]));
    for (std::size_t i = 0; i < best; ++i) {
        if ((mask == nullptr || mask[i] != 0) && values[i] <= values[best] + slack) {
            return i;
        }
    }
    return best;
}

std::size_t argmin(const std::vector<double>& values) {
    const std::vector<std::uint8_t> all(values.size(), 1);
    const std::size_t best = kernels::active().masked_argmin(values.data(), all.data(), values.size());
    return tie_break(values, nullptr, best);
}

void check_training(std::span<const EmpiricalType> training, std::int64_t expected) {
    if (training.size() < 2) {
        throw std::invalid_argument("at least two training sequences are required");
    }
    for (const auto& t : training) {
        if (t.length() != expected) {
            throw std::invalid_argument("training length " + std::to_string(t.length()) +
                                        " differs from the required " + std::to_string(expected));
        }
    }
}

void check_test(const EmpiricalType& head, const EmpiricalType& full, std::int64_t n,
                std::int64_t full_len) {
    if (head.length() != n) {
        throw std::invalid_argument("first-phase type must cover exactly n symbols");
    }
    if (full.length() != full_len) {
        throw std::invalid_argument("test sequence falls short of ceil(kn) symbols");
    }
    for (std::size_t x = 0; x < head.alphabet_size(); ++x) {
        if (full[x] < head[x]) {
            throw std::invalid_argument("full test type must extend the first-phase type");
        }
    }
}

std::vector<EmpiricalType> training_types(std::span<const std::vector<int>> training,
                                          std::size_t alphabet) {
    std::vector<EmpiricalType> out;
    for (const auto& seq : training) {
        out.push_back(empirical_type(seq, alphabet));
    }
    return out;
}

}  // namespace

TestDecision gutman_test(std::span<const EmpiricalType> training, const EmpiricalType& test,
                         double lambda, double alpha) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("Gutman threshold must be positive");
    }
    check_training(training, ceil_length(static_cast<double>(test.length()) * alpha));
    const auto scores = gjs_scores(training, test, alpha);
    const std::size_t m = scores.size();
    bool others_far = true;
    for (std::size_t i = 1; i < m; ++i) {
        others_far = others_far && scores[i] >= lambda;
    }
    if (others_far) {
        return TestDecision::hypothesis(0);
    }
    std::size_t below = 0, which = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (scores[i] < lambda) {
            ++below;
            which = i;
        }
    }
    return below == 1 ? TestDecision::hypothesis(which) : TestDecision::reject();
}

double g_threshold(double beta, std::int64_t n, double alpha, std::size_t alphabet_size) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("beta must lie in (0, 1)");
    }
    if (n <= 0) {
        throw std::invalid_argument("n must be positive");
    }
    const double x = static_cast<double>(alphabet_size);
    const double dn = static_cast<double>(n);
    return -std::log(beta * (x - 1.0)) / dn + 2.0 * x * std::log(dn + 1.0) / dn +
           x * std::log(dn * alpha + 1.0) / dn;
}

SequentialTest::SequentialTest(std::size_t hypotheses, std::size_t alphabet_size,
                               SequentialConfig config)
    : m_(hypotheses),
      alphabet_(alphabet_size),
      config_(config),
      training_counts_(hypotheses, std::vector<std::int64_t>(alphabet_size, 0)),
      test_counts_(alphabet_size, 0) {
    config_.validate();
    if (hypotheses < 2) {
        throw std::invalid_argument("at least two hypotheses are required");
    }
    static_cast<void>(Alphabet(alphabet_size));
}

std::int64_t SequentialTest::training_needed() const {
    return ceil_length(config_.alpha * static_cast<double>(k_ + 1)) - training_len_;
}

bool SequentialTest::step(std::span<const std::vector<int>> new_training, int test_symbol) {
    if (stopped_) {
        throw std::logic_error("sequential test already stopped");
    }
    if (new_training.size() != m_) {
        throw std::invalid_argument("one training block per hypothesis is required");
    }
    const std::int64_t need = training_needed();
    auto bump = [&](std::vector<std::int64_t>& counts, int s) {
        if (s < 0 || static_cast<std::size_t>(s) >= alphabet_) {
            throw std::invalid_argument("symbol outside the alphabet");
        }
        ++counts[static_cast<std::size_t>(s)];
    };
    for (std::size_t i = 0; i < m_; ++i) {
        if (static_cast<std::int64_t>(new_training[i].size()) != need) {
            throw std::invalid_argument("training block has the wrong number of symbols");
        }
        for (int s : new_training[i]) {
            bump(training_counts_[i], s);
        }
    }
    bump(test_counts_, test_symbol);
    training_len_ += need;
    ++k_;

    const double kd = static_cast<double>(k_);
    const double nd = static_cast<double>(training_len_);
    std::vector<double> ty(alphabet_), tx(alphabet_);
    for (std::size_t x = 0; x < alphabet_; ++x) {
        ty[x] = static_cast<double>(test_counts_[x]) / kd;
    }
    std::vector<double> scores(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        for (std::size_t x = 0; x < alphabet_; ++x) {
            tx[x] = nd > 0.0 ? static_cast<double>(training_counts_[i][x]) / nd : 0.0;
        }
        scores[i] = nd > 0.0 ? gjs(tx, ty, config_.alpha) : 0.0;
    }
    const double g = g_threshold(config_.beta, k_, config_.alpha, alphabet_);
    std::vector<std::uint8_t> outside(m_);
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < m_; ++i) {
        outside[i] = scores[i] > g ? 0 : 1;
        rejected += scores[i] > g ? 1 : 0;
    }
    if (rejected + 1 >= m_) {
        stopped_ = true;
        outcome_.tau = k_;
        outcome_.scores = scores;
        if (rejected == m_) {
            outcome_.all_rejected = true;
            outcome_.decision = TestDecision::hypothesis(argmin(scores));
        } else {
            const std::size_t best =
                kernels::active().masked_argmin(scores.data(), outside.data(), m_);
            outcome_.decision = TestDecision::hypothesis(tie_break(scores, outside.data(), best));
        }
    } else if (k_ >= config_.max_steps) {
        stopped_ = true;
        outcome_.tau = k_;
        outcome_.scores = scores;
        outcome_.decision = TestDecision::truncated();
    }
    return stopped_;
}

TestOutcome sequential_test(std::span<SymbolSource> training, SymbolSource& test,
                            std::size_t alphabet_size, const SequentialConfig& config) {
    SequentialTest state(training.size(), alphabet_size, config);
    std::vector<std::vector<int>> blocks(training.size());
    while (true) {
        const std::int64_t need = state.training_needed();
        for (std::size_t i = 0; i < training.size(); ++i) {
            blocks[i].resize(static_cast<std::size_t>(need));
            for (auto& s : blocks[i]) {
                s = training[i]();
            }
        }
        if (state.step(blocks, test())) {
            return state.outcome();
        }
    }
}

TestOutcome two_phase_decide(std::span<const EmpiricalType> training, const EmpiricalType& head,
                             const EmpiricalType& full, const TwoPhaseConfig& config) {
    config.validate(training.size());
    check_training(training, config.training_length());
    check_test(head, full, config.n, config.full_length());
    TestOutcome out;
    out.scores = gjs_scores(training, head, config.alpha);
    const std::size_t best = argmin(out.scores);
    bool stop = true;
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        if (i != best && out.scores[i] < config.lambdas[i]) {
            stop = false;
        }
    }
    if (stop) {
        out.tau = config.n;
        out.phase = 1;
        out.decision = TestDecision::hypothesis(best);
        return out;
    }
    out.scores = gjs_scores(training, full, config.alpha);
    out.tau = config.full_length();
    out.phase = 2;
    out.decision = TestDecision::hypothesis(argmin(out.scores));
    return out;
}

TestOutcome two_phase_test(std::span<const std::vector<int>> training,
                           std::span<const int> test_full, std::size_t alphabet_size,
                           const TwoPhaseConfig& config) {
    config.validate(training.size());
    if (static_cast<std::int64_t>(test_full.size()) < config.full_length()) {
        throw std::invalid_argument("test sequence falls short of ceil(kn) symbols");
    }
    const auto types = training_types(training, alphabet_size);
    const auto head = empirical_type(test_full.first(static_cast<std::size_t>(config.n)), alphabet_size);
    const auto full =
        empirical_type(test_full.first(static_cast<std::size_t>(config.full_length())), alphabet_size);
    return two_phase_decide(types, head, full, config);
}

TestOutcome threshold_two_phase_binary_decide(std::span<const EmpiricalType> training,
                                              const EmpiricalType& head, const EmpiricalType& full,
                                              const ThresholdBinaryConfig& config) {
    config.validate();
    if (training.size() != 2) {
        throw std::invalid_argument("the threshold test is binary");
    }
    check_training(training, config.training_length());
    check_test(head, full, config.n, config.full_length());
    TestOutcome out;
    out.scores = gjs_scores(training, head, config.alpha);
    if (out.scores[0] > config.lambda1 || out.scores[1] > config.lambda2) {
        out.tau = config.n;
        out.phase = 1;
        out.decision = TestDecision::hypothesis(out.scores[0] <= config.lambda1 ? 0 : 1);
        return out;
    }
    out.scores = gjs_scores(training, full, config.alpha / config.k);
    out.tau = config.full_length();
    out.phase = 2;
    out.decision = TestDecision::hypothesis(out.scores[0] <= config.lambda ? 0 : 1);
    return out;
}

TestOutcome threshold_two_phase_binary(std::span<const std::vector<int>> training,
                                       std::span<const int> test_full, std::size_t alphabet_size,
                                       const ThresholdBinaryConfig& config) {
    config.validate();
    if (static_cast<std::int64_t>(test_full.size()) < config.full_length()) {
        throw std::invalid_argument("test sequence falls short of ceil(kn) symbols");
    }
    const auto types = training_types(training, alphabet_size);
    const auto head = empirical_type(test_full.first(static_cast<std::size_t>(config.n)), alphabet_size);
    const auto full =
        empirical_type(test_full.first(static_cast<std::size_t>(config.full_length())), alphabet_size);
    return threshold_two_phase_binary_decide(types, head, full, config);
}

TestOutcome two_phase_ht_decide(std::span<const Distribution> laws, const EmpiricalType& head,
                                const EmpiricalType& full, double k,
                                std::span<const double> lambdas) {
    if (laws.size() < 2 || lambdas.size() != laws.size()) {
        throw std::invalid_argument("need at least two laws and one threshold per law");
    }
    if (!(k >= 1.0)) {
        throw std::invalid_argument("k must be at least 1");
    }
    const std::int64_t n = head.length();
    check_test(head, full, n, ceil_length(k * static_cast<double>(n)));
    auto scores_for = [&](const EmpiricalType& t) {
        const auto f = frequencies(t);
        std::vector<double> s;
        for (const auto& p : laws) {
            require_same_alphabet(p.size(), f.size());
            s.push_back(kl(f, p.probs()));
        }
        return s;
    };
    TestOutcome out;
    out.scores = scores_for(head);
    const std::size_t best = argmin(out.scores);
    bool stop = true;
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        if (i != best && !(out.scores[i] > lambdas[i])) {
            stop = false;
        }
    }
    if (stop) {
        out.tau = n;
        out.phase = 1;
        out.decision = TestDecision::hypothesis(best);
        return out;
    }
    out.scores = scores_for(full);
    out.tau = full.length();
    out.phase = 2;
    out.decision = TestDecision::hypothesis(argmin(out.scores));
    return out;
}

TestOutcome two_phase_ht(std::span<const Distribution> laws, std::span<const int> test_full,
                         std::int64_t n, double k, std::span<const double> lambdas) {
    if (n <= 0) {
        throw std::invalid_argument("n must be positive");
    }
    const std::int64_t full_len = ceil_length(k * static_cast<double>(n));
    if (static_cast<std::int64_t>(test_full.size()) < full_len) {
        throw std::invalid_argument("test sequence falls short of ceil(kn) symbols");
    }
    const std::size_t a = laws.empty() ? 0 : laws.front().size();
    const auto head = empirical_type(test_full.first(static_cast<std::size_t>(n)), a);
    const auto full = empirical_type(test_full.first(static_cast<std::size_t>(full_len)), a);
    return two_phase_ht_decide(laws, head, full, k, lambdas);
}

}  // namespace exlab
