#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "exlab/procedures.hpp"
#include "oracles.hpp"

using exlab::Distribution;
using exlab::EmpiricalType;
using exlab::TestDecision;

namespace exlab {
void PrintTo(const TestDecision& d, std::ostream* os) {
    if (d.is_hypothesis()) {
        *os << "H" << d.index();
    } else {
        *os << (d.kind() == TestDecision::Kind::Reject ? "Reject" : "Truncated");
    }
}
}  // namespace exlab

namespace {

EmpiricalType bin(std::int64_t zeros, std::int64_t len) { return EmpiricalType({zeros, len - zeros}); }

// Lowest index among entries within 1e-12 of the minimum. The flag marks a
// gap between 1e-12 and 1e-9, too close to call against rounding.
std::size_t oracle_argmin(const std::vector<double>& v, bool* near_tie) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[best]) best = i;
    }
    *near_tie = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double gap = std::abs(v[i] - v[best]);
        if (gap >= 1e-12 && gap < 1e-9) *near_tie = true;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] <= v[best] + 1e-12) return i;
    }
    return best;
}

std::vector<int> draw(std::mt19937_64& rng, const Distribution& p, std::size_t len) {
    std::discrete_distribution<int> d(p.probs().begin(), p.probs().end());
    std::vector<int> out(len);
    for (auto& s : out) s = d(rng);
    return out;
}

}  // namespace

TEST(CeilLength, AbsorbsRoundingNoise) {
    EXPECT_EQ(exlab::ceil_length(3.0 * 0.1 * 10.0), 3);
    EXPECT_EQ(exlab::ceil_length(2.5), 3);
    EXPECT_EQ(exlab::ceil_length(4.0), 4);
    EXPECT_EQ(exlab::ceil_length(4.0000001), 5);
    EXPECT_THROW(exlab::ceil_length(-1.0), std::invalid_argument);
}

TEST(Gutman, FrozenBranches) {
    // GJS(1, .75) = 0.19120517789406513, GJS(.5, .75) = 0.06764415113721041.
    const std::vector<EmpiricalType> tr{bin(4, 4), bin(2, 4)};
    EXPECT_EQ(exlab::gutman_test(tr, bin(3, 4), 0.1, 1.0), TestDecision::hypothesis(1));
    EXPECT_EQ(exlab::gutman_test(tr, bin(3, 4), 0.05, 1.0), TestDecision::hypothesis(0));
    EXPECT_EQ(exlab::gutman_test(tr, bin(3, 4), 0.2, 1.0), TestDecision::reject());
    // Test type equal to training 1, others far.
    const std::vector<EmpiricalType> far{bin(4, 4), bin(0, 4), bin(1, 4)};
    EXPECT_EQ(exlab::gutman_test(far, bin(4, 4), 0.3, 1.0), TestDecision::hypothesis(0));
}

TEST(Gutman, LengthMismatchThrows) {
    const std::vector<EmpiricalType> tr{bin(4, 4), bin(2, 4)};
    EXPECT_THROW(exlab::gutman_test(tr, bin(3, 4), 0.1, 2.0), std::invalid_argument);
    EXPECT_THROW(exlab::gutman_test(tr, bin(3, 4), 0.0, 1.0), std::invalid_argument);
}

TEST(Gutman, HandEnumerationBinaryFour) {
    const double lambda = 0.1234567;
    int checked = 0;
    for (int a1 = 0; a1 <= 4; ++a1) {
        for (int a2 = 0; a2 <= 4; ++a2) {
            for (int a3 = 0; a3 <= 4; ++a3) {
                for (int b = 0; b <= 4; ++b) {
                    const std::vector<double> s{oracle::bgjs(a1 / 4.0, b / 4.0, 1.0),
                                                oracle::bgjs(a2 / 4.0, b / 4.0, 1.0),
                                                oracle::bgjs(a3 / 4.0, b / 4.0, 1.0)};
                    for (double v : s) ASSERT_GT(std::abs(v - lambda), 1e-9);
                    TestDecision expect = TestDecision::reject();
                    if (s[1] >= lambda && s[2] >= lambda) {
                        expect = TestDecision::hypothesis(0);
                    } else {
                        int below = 0;
                        std::size_t which = 0;
                        for (std::size_t i = 0; i < 3; ++i) {
                            if (s[i] < lambda) {
                                ++below;
                                which = i;
                            }
                        }
                        if (below == 1) expect = TestDecision::hypothesis(which);
                    }
                    const std::vector<EmpiricalType> tr{bin(a1, 4), bin(a2, 4), bin(a3, 4)};
                    EXPECT_EQ(exlab::gutman_test(tr, bin(b, 4), lambda, 1.0), expect)
                        << a1 << a2 << a3 << b;
                    ++checked;
                }
            }
        }
    }
    EXPECT_EQ(checked, 625);
}

TEST(GThreshold, FrozenValue) {
    EXPECT_NEAR(exlab::g_threshold(0.1, 100, 2.0, 2), 0.31369676976477234, 1e-15);
    const double direct = -std::log(0.1) / 100 + 4 * std::log(101.0) / 100 + 2 * std::log(201.0) / 100;
    EXPECT_NEAR(exlab::g_threshold(0.1, 100, 2.0, 2), direct, 1e-15);
    EXPECT_THROW(exlab::g_threshold(0.0, 10, 1.0, 2), std::invalid_argument);
    EXPECT_THROW(exlab::g_threshold(1.0, 10, 1.0, 2), std::invalid_argument);
}

TEST(GThreshold, DecreasingInN) {
    for (double beta : {0.1, 1e-3}) {
        for (std::int64_t n = 3; n < 2000; ++n) {
            EXPECT_LT(exlab::g_threshold(beta, n + 1, 1.5, 3), exlab::g_threshold(beta, n, 1.5, 3));
        }
    }
    // n g(n) + log(beta(|X|-1)) grows like log n.
    const auto excess = [](std::int64_t n) {
        return n * exlab::g_threshold(0.01, n, 1.0, 2) + std::log(0.01);
    };
    EXPECT_NEAR(excess(1000000) / std::log(1e6), 6.0, 0.01);
}

TEST(Sequential, NeverStopsWhileScoresBelowThreshold) {
    exlab::SequentialConfig cfg{0.01, 1.0, 200};
    exlab::SequentialTest test(2, 2, cfg);
    // Both training streams repeat the test symbol: every score is zero.
    while (!test.stopped()) {
        const std::vector<std::vector<int>> blocks(2, std::vector<int>(test.training_needed(), 0));
        test.step(blocks, 0);
    }
    EXPECT_EQ(test.outcome().decision, TestDecision::truncated());
    EXPECT_EQ(test.outcome().tau, 200);
    EXPECT_THROW(test.step({}, 0), std::logic_error);
}

TEST(Sequential, AccountingAndConsistency) {
    std::mt19937_64 rng(7);
    const std::vector<Distribution> laws{Distribution({0.5, 0.3, 0.2}), Distribution({0.2, 0.3, 0.5}),
                                         Distribution({0.3, 0.5, 0.2})};
    const exlab::SequentialConfig cfg{0.05, 1.5, 100000};
    for (int trial = 0; trial < 200; ++trial) {
        exlab::SequentialTest test(3, 3, cfg);
        std::vector<std::vector<int>> seen(3);
        const std::size_t truth = trial % 3;
        while (true) {
            const auto need = test.training_needed();
            ASSERT_EQ(static_cast<std::int64_t>(seen[0].size()) + need,
                      exlab::ceil_length(1.5 * static_cast<double>(test.step_index() + 1)));
            std::vector<std::vector<int>> blocks;
            for (std::size_t i = 0; i < 3; ++i) {
                blocks.push_back(draw(rng, laws[i], static_cast<std::size_t>(need)));
                seen[i].insert(seen[i].end(), blocks.back().begin(), blocks.back().end());
            }
            if (test.step(blocks, draw(rng, laws[truth], 1)[0])) break;
        }
        const auto& out = test.outcome();
        ASSERT_TRUE(out.decision.is_hypothesis());
        const double g = exlab::g_threshold(cfg.beta, out.tau, cfg.alpha, 3);
        int rejected = 0;
        for (double s : out.scores) rejected += s > g ? 1 : 0;
        EXPECT_GE(rejected, 2);
        if (!out.all_rejected) {
            EXPECT_LE(out.scores[out.decision.index()], g);
        }
    }
}

TEST(Sequential, SeparatedLawsDecideCorrectly) {
    const std::vector<Distribution> laws{Distribution({0.9, 0.1}), Distribution({0.1, 0.9})};
    const exlab::SequentialConfig cfg{1e-3, 1.0, 100000};
    std::mt19937_64 rng(11);
    int correct = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const std::size_t truth = t % 2;
        std::vector<exlab::SymbolSource> sources;
        for (std::size_t i = 0; i < 2; ++i) {
            sources.emplace_back([&, i] { return draw(rng, laws[i], 1)[0]; });
        }
        exlab::SymbolSource y = [&] { return draw(rng, laws[truth], 1)[0]; };
        const auto out = exlab::sequential_test(sources, y, 2, cfg);
        correct += out.decision == TestDecision::hypothesis(truth) ? 1 : 0;
    }
    EXPECT_GE(correct, 0.99 * trials);
}

TEST(TwoPhase, HandEnumerationBinaryFour) {
    exlab::TwoPhaseConfig cfg;
    cfg.n = 4;
    cfg.k = 2.0;
    cfg.alpha = 1.0;
    cfg.lambdas = {0.0712345, 0.1312345};
    int ties = 0;
    for (int a1 = 0; a1 <= 4; ++a1) {
        for (int a2 = 0; a2 <= 4; ++a2) {
            for (int b = 0; b <= 4; ++b) {
                for (int c = 0; c <= 4; ++c) {
                    const std::vector<double> s1{oracle::bgjs(a1 / 4.0, b / 4.0, 1.0),
                                                 oracle::bgjs(a2 / 4.0, b / 4.0, 1.0)};
                    bool tie1 = false, tie2 = false;
                    const std::size_t star = oracle_argmin(s1, &tie1);
                    const std::size_t other = 1 - star;
                    ASSERT_GT(std::abs(s1[other] - cfg.lambdas[other]), 1e-9);
                    const bool stop = s1[other] >= cfg.lambdas[other];
                    const std::vector<double> s2{oracle::bgjs(a1 / 4.0, (b + c) / 8.0, 1.0),
                                                 oracle::bgjs(a2 / 4.0, (b + c) / 8.0, 1.0)};
                    const std::size_t late = oracle_argmin(s2, &tie2);
                    const std::vector<EmpiricalType> tr{bin(a1, 4), bin(a2, 4)};
                    const auto out = exlab::two_phase_decide(tr, bin(b, 4), bin(b + c, 8), cfg);
                    if (tie1 || (!stop && tie2)) {
                        ++ties;
                        continue;
                    }
                    EXPECT_EQ(out.phase, stop ? 1 : 2);
                    EXPECT_EQ(out.tau, stop ? 4 : 8);
                    EXPECT_EQ(out.decision, TestDecision::hypothesis(stop ? star : late))
                        << a1 << a2 << b << c;
                }
            }
        }
    }
    EXPECT_EQ(ties, 0);
}

TEST(TwoPhase, ZeroThresholdsAlwaysStopAtN) {
    for (std::int64_t n = 1; n <= 8; ++n) {
        exlab::TwoPhaseConfig cfg;
        cfg.n = n;
        cfg.k = 3.0;
        cfg.alpha = 1.0;
        cfg.lambdas = {0.0, 0.0, 0.0};
        for (int a1 = 0; a1 <= n; ++a1) {
            for (int a2 = 0; a2 <= n; ++a2) {
                for (int a3 = 0; a3 <= n; ++a3) {
                    for (int b = 0; b <= n; ++b) {
                        const std::vector<EmpiricalType> tr{bin(a1, n), bin(a2, n), bin(a3, n)};
                        const auto out = exlab::two_phase_decide(tr, bin(b, n), bin(b, 3 * n), cfg);
                        ASSERT_EQ(out.phase, 1);
                        ASSERT_EQ(out.tau, n);
                    }
                }
            }
        }
    }
}

TEST(TwoPhase, MatchingTypeStopsEarly) {
    exlab::TwoPhaseConfig cfg;
    cfg.n = 10;
    cfg.k = 2.0;
    cfg.alpha = 2.0;
    cfg.lambdas = {0.2, 0.2, 0.2};
    const std::vector<EmpiricalType> tr{EmpiricalType({2, 8, 10}), EmpiricalType({14, 4, 2}),
                                        EmpiricalType({4, 14, 2})};
    const auto out = exlab::two_phase_decide(tr, EmpiricalType({7, 2, 1}), EmpiricalType({14, 4, 2}), cfg);
    EXPECT_EQ(out.phase, 1);
    EXPECT_EQ(out.decision, TestDecision::hypothesis(1));
    EXPECT_EQ(out.scores[1], 0.0);
}

TEST(TwoPhase, NeverRejectsAndIsDeterministic) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> m_dist(2, 5), a_dist(2, 5), n_dist(1, 30);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100000; ++trial) {
        const int m = m_dist(rng), a = a_dist(rng), n = n_dist(rng);
        exlab::TwoPhaseConfig cfg;
        cfg.n = n;
        cfg.k = 1.0 + 3.0 * u(rng);
        cfg.alpha = 0.3 + 3.0 * u(rng);
        for (int i = 0; i < m; ++i) cfg.lambdas.push_back(0.5 * u(rng));
        std::uniform_int_distribution<int> sym(0, a - 1);
        std::vector<std::vector<int>> training(m, std::vector<int>(cfg.training_length()));
        for (auto& seq : training) {
            for (auto& s : seq) s = sym(rng);
        }
        std::vector<int> test(cfg.full_length());
        for (auto& s : test) s = sym(rng);
        const auto out = exlab::two_phase_test(training, test, a, cfg);
        ASSERT_TRUE(out.decision.is_hypothesis());
        ASSERT_TRUE(out.tau == cfg.n || out.tau == cfg.full_length());
        if (trial % 1000 == 0) {
            const auto again = exlab::two_phase_test(training, test, a, cfg);
            EXPECT_EQ(again.decision, out.decision);
            EXPECT_EQ(again.tau, out.tau);
            EXPECT_EQ(again.scores, out.scores);
        }
    }
}

TEST(TwoPhase, Shortfalls) {
    exlab::TwoPhaseConfig cfg;
    cfg.n = 4;
    cfg.k = 2.5;
    cfg.alpha = 1.0;
    cfg.lambdas = {0.1, 0.1};
    const std::vector<std::vector<int>> training{{0, 1, 0, 1}, {1, 1, 1, 0}};
    EXPECT_THROW(exlab::two_phase_test(training, std::vector<int>(9, 0), 2, cfg), std::invalid_argument);
    EXPECT_NO_THROW(exlab::two_phase_test(training, std::vector<int>(10, 0), 2, cfg));
    const std::vector<std::vector<int>> short_training{{0, 1, 0}, {1, 1, 1, 0}};
    EXPECT_THROW(exlab::two_phase_test(short_training, std::vector<int>(10, 0), 2, cfg),
                 std::invalid_argument);
    cfg.lambdas = {0.1};
    EXPECT_THROW(exlab::two_phase_test(training, std::vector<int>(10, 0), 2, cfg), std::invalid_argument);
}

TEST(ThresholdBinary, HugeThresholdsAlwaysGoToSecondPhase) {
    exlab::ThresholdBinaryConfig cfg{4, 3.0, 1.0, 1e9, 1e9, 0.01};
    for (int a1 = 0; a1 <= 4; ++a1) {
        for (int a2 = 0; a2 <= 4; ++a2) {
            for (int b = 0; b <= 4; ++b) {
                const std::vector<EmpiricalType> tr{bin(a1, 4), bin(a2, 4)};
                const auto out = exlab::threshold_two_phase_binary_decide(tr, bin(b, 4), bin(b, 12), cfg);
                EXPECT_EQ(out.tau, 12);
                EXPECT_EQ(out.phase, 2);
            }
        }
    }
}

TEST(ThresholdBinary, HandEnumeration) {
    exlab::ThresholdBinaryConfig cfg{4, 2.0, 1.0, 0.0512345, 0.0412345, 0.0312345};
    for (int a1 = 0; a1 <= 4; ++a1) {
        for (int a2 = 0; a2 <= 4; ++a2) {
            for (int b = 0; b <= 4; ++b) {
                for (int c = 0; c <= 4; ++c) {
                    const double s1 = oracle::bgjs(a1 / 4.0, b / 4.0, 1.0);
                    const double s2 = oracle::bgjs(a2 / 4.0, b / 4.0, 1.0);
                    const double late = oracle::bgjs(a1 / 4.0, (b + c) / 8.0, 0.5);
                    const bool early = s1 > cfg.lambda1 || s2 > cfg.lambda2;
                    const std::size_t expect = early ? (s1 <= cfg.lambda1 ? 0 : 1) : (late <= cfg.lambda ? 0 : 1);
                    const std::vector<EmpiricalType> tr{bin(a1, 4), bin(a2, 4)};
                    const auto out =
                        exlab::threshold_two_phase_binary_decide(tr, bin(b, 4), bin(b + c, 8), cfg);
                    EXPECT_EQ(out.phase, early ? 1 : 2);
                    EXPECT_EQ(out.decision, TestDecision::hypothesis(expect)) << a1 << a2 << b << c;
                }
            }
        }
    }
}

TEST(KnownLaw, HandEnumerationBinaryFive) {
    const std::vector<Distribution> laws{Distribution({0.2, 0.8}), Distribution({0.6, 0.4})};
    const std::vector<double> lambdas{0.0812345, 0.1012345};
    for (int b = 0; b <= 5; ++b) {
        for (int c = 0; c <= 5; ++c) {
            const std::vector<double> s1{oracle::bkl(b / 5.0, 0.2), oracle::bkl(b / 5.0, 0.6)};
            const std::size_t star = s1[0] <= s1[1] ? 0 : 1;
            const bool stop = s1[1 - star] > lambdas[1 - star];
            const std::vector<double> s2{oracle::bkl((b + c) / 10.0, 0.2), oracle::bkl((b + c) / 10.0, 0.6)};
            const std::size_t late = s2[0] <= s2[1] ? 0 : 1;
            const auto out = exlab::two_phase_ht_decide(laws, bin(b, 5), bin(b + c, 10), 2.0, lambdas);
            EXPECT_EQ(out.phase, stop ? 1 : 2);
            EXPECT_EQ(out.decision, TestDecision::hypothesis(stop ? star : late)) << b << c;
        }
    }
}

TEST(KnownLaw, ExactTypeAndStrictBoundary) {
    const std::vector<Distribution> laws{Distribution({0.2, 0.8}), Distribution({0.6, 0.4})};
    const auto out = exlab::two_phase_ht(laws, std::vector<int>{0, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 5, 2.0,
                                         std::vector<double>{0.0, 0.0});
    EXPECT_EQ(out.decision, TestDecision::hypothesis(0));
    EXPECT_EQ(out.scores[0], 0.0);
    EXPECT_EQ(out.phase, 1);
    // Identical laws would give a zero score for i != t*, which fails the strict test.
    const std::vector<Distribution> same{Distribution({0.2, 0.8}), Distribution({0.2, 0.8})};
    const auto tie = exlab::two_phase_ht_decide(same, bin(1, 5), bin(2, 10), 2.0, std::vector<double>{0.0, 0.0});
    EXPECT_EQ(tie.phase, 2);
    EXPECT_EQ(tie.decision, TestDecision::hypothesis(0));
}
