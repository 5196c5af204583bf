#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "exlab/montecarlo.hpp"
#include "oracles.hpp"

using exlab::Distribution;
using exlab::ProblemInstance;
using exlab::SimPlan;
using exlab::TestKind;

namespace {

SimPlan plan_for(ProblemInstance inst, TestKind kind, std::vector<double> lambdas,
                 std::vector<std::int64_t> grid, std::int64_t trials, std::uint64_t seed) {
    SimPlan p{std::move(inst)};
    p.kind = kind;
    p.lambdas = std::move(lambdas);
    p.n_grid = std::move(grid);
    p.trials = trials;
    p.seed = seed;
    p.threads = 1;
    return p;
}

void expect_same(const std::vector<exlab::SimResult>& a, const std::vector<exlab::SimResult>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].error_count, b[i].error_count);
        EXPECT_EQ(a[i].excess_count, b[i].excess_count);
        EXPECT_EQ(a[i].per_hypothesis_tau, b[i].per_hypothesis_tau);
        EXPECT_EQ(a[i].wilson_halfwidth, b[i].wilson_halfwidth);
        EXPECT_EQ(a[i].mean_tau, b[i].mean_tau);
        EXPECT_EQ(a[i].excess_rate, b[i].excess_rate);
    }
}

}  // namespace

TEST(Philox, KnownAnswers) {
    using C = exlab::Philox4x32::Counter;
    EXPECT_EQ(exlab::Philox4x32::block(C{0, 0, 0, 0}, {0, 0}),
              (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(exlab::Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                       {0xffffffffu, 0xffffffffu}),
              (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(exlab::Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                       {0xa4093822u, 0x299f31d0u}),
              (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, SubstreamsAreDistinctAndRepeatable) {
    exlab::RandomStream a(42, 0, 10, 5), b(42, 0, 10, 5), c(42, 0, 10, 6), d(43, 0, 10, 5);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = a.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        EXPECT_EQ(u, b.uniform());
        sum += u;
    }
    EXPECT_NEAR(sum / 10000, 0.5, 0.01);
    EXPECT_NE(c.uniform(), d.uniform());
}

TEST(SymbolSampler, CountsMatchSymbolDraws) {
    const Distribution law({0.2, 0.0, 0.5, 0.3});
    const exlab::SymbolSampler s(law);
    exlab::RandomStream r1(9, 1, 2, 3), r2(9, 1, 2, 3);
    const auto counts = s.counts(r1, 5000);
    std::vector<std::int64_t> manual(4, 0);
    for (int i = 0; i < 5000; ++i) ++manual[static_cast<std::size_t>(s.draw(r2))];
    EXPECT_EQ(counts, manual);
    EXPECT_EQ(counts[1], 0);
    EXPECT_NEAR(counts[2] / 5000.0, 0.5, 0.03);
    const exlab::SymbolSampler tail(Distribution({0.5, 0.5, 0.0}));
    exlab::RandomStream r3(1, 1, 1, 1);
    EXPECT_EQ(tail.counts(r3, 10000)[2], 0);
}

TEST(Wilson, MatchesReferenceValues) {
    auto ci = exlab::wilson_interval(10, 100);
    EXPECT_NEAR(ci.lo, 0.05522913706067509, 1e-7);
    EXPECT_NEAR(ci.hi, 0.17436566150491348, 1e-7);
    ci = exlab::wilson_interval(37, 250);
    EXPECT_NEAR(ci.lo, 0.10931982398325643, 1e-7);
    EXPECT_NEAR(ci.hi, 0.19733401886153654, 1e-7);
    ci = exlab::wilson_interval(0, 1000, exlab::kZ95OneSided);
    EXPECT_EQ(ci.lo, 0.0);
    EXPECT_NEAR(ci.hi, 0.002698243239760524, 1e-5);
    EXPECT_THROW(exlab::wilson_interval(5, 4), std::invalid_argument);
}

TEST(RunSim, PointMassesNeverErr) {
    const ProblemInstance inst({Distribution({1.0, 0.0}), Distribution({0.0, 1.0})}, 1.0, 2.0);
    auto plan = plan_for(inst, TestKind::TwoPhase, {1e-6, 1e-6}, {3}, 1, 5);
    const auto r = exlab::run_sim(plan);
    EXPECT_EQ(r[0].error_count, (std::vector<std::int64_t>{0, 0}));
    EXPECT_EQ(r[0].excess_count, (std::vector<std::int64_t>{0, 0}));
    EXPECT_GT(r[0].reported_error[0], 0.0);
    const auto exact = exlab::exact_enumerate(plan, 3);
    EXPECT_EQ(exact.per_hypothesis_error[0], 0.0L);
    EXPECT_EQ(exact.per_hypothesis_error[1], 0.0L);
}

TEST(RunSim, BitIdenticalAcrossThreadCounts) {
    const ProblemInstance inst({Distribution({0.25, 0.75}), Distribution({0.28, 0.72}),
                                Distribution({0.22, 0.78})},
                               2.0, 3.0);
    auto plan = plan_for(inst, TestKind::TwoPhase, {0.004, 0.0008, 0.0009}, {20, 40}, 1500, 77);
    const auto one = exlab::run_sim(plan);
    plan.threads = 3;
    const auto three = exlab::run_sim(plan);
    plan.threads = 8;
    const auto eight = exlab::run_sim(plan);
    expect_same(one, three);
    expect_same(one, eight);
    for (const auto& r : one) {
        EXPECT_GE(r.mean_tau, static_cast<double>(r.n));
        EXPECT_LE(r.mean_tau, static_cast<double>(3 * r.n));
    }
}

TEST(RunSim, WilsonHalfWidthShrinksBySqrtTwo) {
    const ProblemInstance inst({Distribution({0.4, 0.6}), Distribution({0.6, 0.4})}, 1.0, 2.0);
    auto plan = plan_for(inst, TestKind::TwoPhase, {0.01, 0.01}, {10}, 20000, 3);
    const auto small = exlab::run_sim(plan);
    plan.trials = 40000;
    const auto big = exlab::run_sim(plan);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(small[0].wilson_halfwidth[j] / big[0].wilson_halfwidth[j], std::sqrt(2.0), 0.05);
    }
}

TEST(RunSim, PlanValidation) {
    const ProblemInstance inst({Distribution({0.4, 0.6}), Distribution({0.6, 0.4})}, 1.0, 2.0);
    auto plan = plan_for(inst, TestKind::TwoPhase, {0.01, 0.01}, {}, 10, 3);
    EXPECT_THROW(exlab::run_sim(plan), std::invalid_argument);
    plan.n_grid = {10, 10};
    EXPECT_THROW(exlab::run_sim(plan), std::invalid_argument);
    plan.n_grid = {10};
    plan.lambdas = {0.1};
    EXPECT_THROW(exlab::run_sim(plan), std::invalid_argument);
}

// Brute force over raw sequences: M=2, binary, n=2, alpha=1, k=2.
TEST(ExactEnumerate, MatchesSequenceBruteForce) {
    const ProblemInstance inst({Distribution({0.3, 0.7}), Distribution({0.6, 0.4})}, 1.0, 2.0);
    const std::vector<double> lam{0.05, 0.2};
    const auto plan = plan_for(inst, TestKind::TwoPhase, lam, {2}, 1, 1);
    const auto exact = exlab::exact_enumerate(plan, 2);
    const double p0[2] = {0.3, 0.6};
    for (std::size_t j = 0; j < 2; ++j) {
        double err = 0.0, excess = 0.0;
        for (int bits = 0; bits < 256; ++bits) {
            // bits: x1 (2), x2 (2), y head (2), y tail (2); bit set = symbol 1.
            auto zeros = [&](int from, int len) {
                int z = 0;
                for (int b = from; b < from + len; ++b) z += ((bits >> b) & 1) ? 0 : 1;
                return z;
            };
            auto prob = [&](int from, int len, double q0) {
                double p = 1.0;
                for (int b = from; b < from + len; ++b) p *= ((bits >> b) & 1) ? 1.0 - q0 : q0;
                return p;
            };
            const double pr = prob(0, 2, p0[0]) * prob(2, 2, p0[1]) * prob(4, 4, p0[j]);
            const double t1 = zeros(0, 2) / 2.0, t2 = zeros(2, 2) / 2.0;
            const double h = zeros(4, 2) / 2.0, f = zeros(4, 4) / 4.0;
            const double s1[2] = {oracle::bgjs(t1, h, 1.0), oracle::bgjs(t2, h, 1.0)};
            const std::size_t star = s1[0] <= s1[1] + 1e-12 ? 0 : 1;
            std::size_t decision = star;
            if (s1[1 - star] < lam[1 - star]) {
                excess += pr;
                const double s2[2] = {oracle::bgjs(t1, f, 1.0), oracle::bgjs(t2, f, 1.0)};
                decision = s2[0] <= s2[1] + 1e-12 ? 0 : 1;
            }
            if (decision != j) err += pr;
        }
        EXPECT_NEAR(static_cast<double>(exact.per_hypothesis_error[j]), err, 1e-13);
        EXPECT_NEAR(static_cast<double>(exact.excess_prob[j]), excess, 1e-13);
    }
}

TEST(ExactEnumerate, KnownLawAndThresholdKinds) {
    const ProblemInstance inst({Distribution({0.3, 0.7}), Distribution({0.6, 0.4})}, 1.0, 2.0);
    auto plan = plan_for(inst, TestKind::KnownLaw, {0.05, 0.05}, {6}, 100000, 21);
    auto exact = exlab::exact_enumerate(plan, 6);
    auto sim = exlab::run_sim(plan);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto ci = exlab::wilson_interval(sim[0].error_count[j], plan.trials);
        EXPECT_GE(static_cast<double>(exact.per_hypothesis_error[j]), ci.lo);
        EXPECT_LE(static_cast<double>(exact.per_hypothesis_error[j]), ci.hi);
    }
    plan.kind = TestKind::ThresholdBinary;
    plan.lambda1 = 0.02;
    plan.lambda2 = 0.03;
    plan.lambda = 0.01;
    exact = exlab::exact_enumerate(plan, 6);
    sim = exlab::run_sim(plan);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto ci = exlab::wilson_interval(sim[0].error_count[j], plan.trials);
        EXPECT_GE(static_cast<double>(exact.per_hypothesis_error[j]), ci.lo);
        EXPECT_LE(static_cast<double>(exact.per_hypothesis_error[j]), ci.hi);
        const auto ce = exlab::wilson_interval(sim[0].excess_count[j], plan.trials);
        EXPECT_GE(static_cast<double>(exact.excess_prob[j]), ce.lo);
        EXPECT_LE(static_cast<double>(exact.excess_prob[j]), ce.hi);
    }
}

TEST(ExactEnumerate, SizeGuard) {
    const ProblemInstance inst({Distribution({0.3, 0.7}), Distribution({0.6, 0.4}),
                                Distribution({0.5, 0.5})},
                               4.0, 2.0);
    const auto plan = plan_for(inst, TestKind::TwoPhase, {0.05, 0.05, 0.05}, {40}, 1, 1);
    EXPECT_GT(exlab::enumeration_size(plan, 40), exlab::kEnumerationLimit);
    EXPECT_THROW(exlab::exact_enumerate(plan, 40), exlab::SizeGuardError);
    EXPECT_EQ(exlab::enumeration_size(plan, 1), 5.0 * 5.0 * 5.0 * 2.0 * 2.0);
}

TEST(SlopeFit, SyntheticCurves) {
    const std::vector<std::int64_t> n{100, 200, 300, 400};
    std::vector<double> p;
    for (auto v : n) p.push_back(std::exp(-0.01 * static_cast<double>(v)));
    EXPECT_NEAR(exlab::fit_decay(n, p).slope, 0.01, 1e-6);
    EXPECT_NEAR(exlab::fit_decay(n, {0.2, 0.2, 0.2, 0.2}).slope, 0.0, 1e-15);
    const auto fit = exlab::fit_decay(n, {0.1, 0.0, 0.01, 0.0});
    EXPECT_EQ(fit.excluded, (std::vector<std::int64_t>{200, 400}));
    EXPECT_NEAR(fit.slope, std::log(10.0) / 200.0, 1e-12);
    EXPECT_THROW(exlab::fit_decay(n, {0.1, 0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(SequentialSim, ReproducibleAndAccurate) {
    const ProblemInstance inst({Distribution({0.9, 0.1}), Distribution({0.1, 0.9})}, 1.0);
    const auto a = exlab::run_sequential_sim(inst, 1e-2, 600, 5, 0, 1);
    const auto b = exlab::run_sequential_sim(inst, 1e-2, 600, 5, 0, 4);
    EXPECT_EQ(a.per_hypothesis_error, b.per_hypothesis_error);
    EXPECT_EQ(a.mean_tau, b.mean_tau);
    EXPECT_EQ(a.truncated, 0);
    for (double e : a.per_hypothesis_error) EXPECT_LE(e, 0.01);
}
