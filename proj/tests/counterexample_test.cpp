#include "sdg/counterexample.hpp"

#include <cmath>
#include <numbers>

#include "gtest/gtest.h"

namespace sdg {
namespace {

TEST(StrongLowerTest, DeterministicGameIsZero) {
    CounterexampleParams p;
    p.alpha = 0.0;
    const StrongLowerResult r = strong_lower_estimate(p);
    EXPECT_EQ(r.estimate.mean, 0.0);
    EXPECT_EQ(r.estimate.paths, 0u);
}

TEST(StrongLowerTest, GaussianAbsoluteMoment) {
    CounterexampleParams p;
    const StrongLowerResult r = strong_lower_estimate(p);
    const double exact = 0.3 * std::sqrt(4.0 / std::numbers::pi);
    EXPECT_NEAR(r.gaussian_identity, exact, 1e-15);
    EXPECT_NEAR(r.analytic_bound, 0.3 * std::sqrt(2.0), 1e-15);
    EXPECT_LE(std::abs(r.estimate.mean - exact), 3.0 * r.estimate.std_error);
    EXPECT_LE(r.estimate.mean, r.analytic_bound + 3.0 * r.estimate.std_error);
    EXPECT_EQ(r.estimate.paths, p.n_paths);
    EXPECT_EQ(r.regime, "gap regime");
}

TEST(StrongLowerTest, OutsideRegimeIsLabelled) {
    CounterexampleParams p;
    p.alpha = 1.0;
    p.n_paths = 40000;
    const StrongLowerResult r = strong_lower_estimate(p);
    EXPECT_EQ(r.regime, "outside gap regime");
    EXPECT_LE(std::abs(r.estimate.mean - std::sqrt(4.0 / std::numbers::pi)), 3.0 * r.estimate.std_error);
}

TEST(StrongLowerTest, BoundHoldsAcrossSeeds) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        CounterexampleParams p;
        p.seed = seed;
        p.n_paths = 4000;
        const StrongLowerResult r = strong_lower_estimate(p);
        EXPECT_LE(r.estimate.mean, r.analytic_bound + 3.0 * r.estimate.std_error) << seed;
    }
}

TEST(StrongLowerTest, ThreadCountAndBatchInvariance) {
    CounterexampleParams p;
    p.n_paths = 20000;
    const double one = strong_lower_estimate(p, Parallelism{1}).estimate.mean;
    EXPECT_EQ(one, strong_lower_estimate(p, Parallelism{4}).estimate.mean);
    p.seed += 1;
    EXPECT_NE(one, strong_lower_estimate(p).estimate.mean);
}

OpenLoopControl constant(double v) {
    OpenLoopControl c;
    c.level = v;
    c.name = "c";
    return c;
}

TEST(StrongUpperTest, ZeroControlBestResponse) {
    CounterexampleParams p;
    const StrongUpperResult r = strong_upper_estimate(p, {constant(0.0)});
    ASSERT_EQ(r.candidates.size(), 1u);
    EXPECT_EQ(r.candidates[0].u0, 1.0);
    EXPECT_GE(r.candidates[0].payoff.mean, 1.5);
}

TEST(StrongUpperTest, MatchedControlTiesToPlusOne) {
    CounterexampleParams p;
    const StrongUpperResult r = strong_upper_estimate(p, {constant(p.a / p.T)});
    EXPECT_EQ(r.candidates[0].mean_x2, p.a);
    EXPECT_EQ(r.candidates[0].u0, 1.0);
    EXPECT_GE(r.candidates[0].payoff.mean, p.T - 3.0 * r.candidates[0].payoff.std_error);
}

TEST(StrongUpperTest, DeterministicGameExact) {
    CounterexampleParams p;
    p.alpha = 0.0;
    const StrongUpperResult r = strong_upper_estimate(p, default_candidates(p));
    for (const CandidatePayoff& c : r.candidates) {
        EXPECT_EQ(c.payoff.paths, 0u);
        EXPECT_GE(c.payoff.mean, p.T) << c.name;
    }
}

TEST(StrongUpperTest, EveryCandidateAtLeastHorizon) {
    CounterexampleParams p;
    const StrongUpperResult r = strong_upper_estimate(p, default_candidates(p));
    EXPECT_TRUE(r.all_at_least_T);
    EXPECT_EQ(r.candidates.size(), default_candidates(p).size());
    for (const CandidatePayoff& c : r.candidates) EXPECT_GE(c.payoff.mean, p.T - 3.0 * c.payoff.std_error) << c.name;
}

TEST(StrongUpperTest, RejectsOutOfRangeCandidate) {
    CounterexampleParams p;
    OpenLoopControl c = constant(1.5);
    c.kind = OpenLoopControl::Kind::sinusoid;
    c.amplitude = 1.0;
    EXPECT_THROW(strong_upper_estimate(p, {c}), ValidationError);
}

TEST(OpenLoopControlTest, IntegralsMatchQuadrature) {
    CounterexampleParams p;
    p.T = 1.7;
    for (const OpenLoopControl& c : default_candidates(p)) {
        const int n = 200000;
        double q = 0.0;
        for (int i = 0; i < n; ++i) q += c((i + 0.5) * p.T / n, p.T) * p.T / n;
        EXPECT_NEAR(c.integral(p.T), q, 1e-4) << c.name;
        EXPECT_LE(c.sup_norm(), 2.0);
    }
}

TEST(GapReportTest, GapRegimeMargins) {
    CounterexampleParams p;
    const StrongLowerResult lo = strong_lower_estimate(p);
    const StrongUpperResult up = strong_upper_estimate(p, default_candidates(p));
    const GameSpec spec = make_spec(counterexample_scenario(p));
    const GapReport g = gap_report(p, lo, up, {weak_values(spec, 21), weak_values(spec, 41)});
    EXPECT_TRUE(g.gap_ok);
    EXPECT_GT(g.strong_gap, 0.5);
    EXPECT_GE(g.strong_gap, g.required_gap);
    EXPECT_TRUE(g.weak_shrinks);
    for (const WeakLevel& w : g.weak) {
        EXPECT_LE(w.lower, w.upper + 1e-10);
        EXPECT_LE(w.difference(), 1e-10);
        EXPECT_LE(w.upper, up.minimum.mean);
    }
}

TEST(GapReportTest, DeterministicGapIsHorizon) {
    CounterexampleParams p;
    p.alpha = 0.0;
    const GapReport g = gap_report(p, strong_lower_estimate(p), strong_upper_estimate(p, default_candidates(p)), {});
    EXPECT_EQ(g.strong_gap, p.T);
    EXPECT_TRUE(g.gap_ok);
}

}  // namespace
}  // namespace sdg
