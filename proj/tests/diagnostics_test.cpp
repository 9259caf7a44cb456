#include "sdg/diagnostics.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "sdg/scenarios.hpp"
#include "test_support.hpp"

namespace sdg {
namespace {

struct Lower {
    GameSpec spec;
    Grid grid;
    TransitionKernel kernel;
    GameSolution sol;
    Lower(GameSpec s, const GridRequest& r, const Parallelism& par = {})
        : spec(std::move(s)),
          grid(build_grid(spec, r)),
          kernel(spec, grid),
          sol(solve_game(spec, grid, kernel, Side::lower, par)) {}
};

TEST(CheckBoundsTest, HeatPasses) {
    Lower s(make_spec(testing::heat_params()), testing::request(101));
    const BoundReport r = check_bounds(s.sol.field, s.spec);
    EXPECT_TRUE(r.passed);
    // L0 = 0: B = C0 + n_t·dt·C0
    EXPECT_NEAR(r.bound, s.spec.coeffs.C0 * (1.0 + s.spec.T), 1e-12);
    EXPECT_LE(r.max_abs, s.spec.coeffs.C0 + 1e-12);
}

TEST(CheckBoundsTest, ConstantTerminalIsReproduced) {
    ScenarioParams p = testing::constant_params(1, 1.0);
    p.terminal = TerminalParams{"constant", 0.75, 0.0, 0.0};
    Lower s(make_spec(p), testing::request(41));
    const BoundReport r = check_bounds(s.sol.field, s.spec);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.max_abs, 0.75);
    for (double v : s.sol.field.values) EXPECT_EQ(v, 0.75);
}

TEST(CheckBoundsTest, InjectedFaultIsLocated) {
    Lower s(make_spec(testing::example81_params()), testing::request(21));
    ValueField f = s.sol.field;
    const double b = discrete_value_bound(s.spec, f.n_t);
    f.slice(3)[17] = 10.0 * b;
    const BoundReport r = check_bounds(f, s.spec);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.violations, 1u);
    EXPECT_EQ(r.worst_slice, 3);
    EXPECT_EQ(r.worst_node, 17u);
    EXPECT_EQ(r.worst_value, 10.0 * b);
}

TEST(CheckBoundsTest, RecursionWithLipschitzDriver) {
    ScenarioParams p = testing::constant_params(1, 1.0);
    p.L0 = 0.5;
    p.C0 = 2.0;
    const GameSpec spec = make_spec(p);
    double b = 2.0;
    const double dt = 0.25;
    for (int k = 0; k < 4; ++k) b = (1.0 + 0.5 * dt) * b + 2.0 * dt;
    EXPECT_DOUBLE_EQ(discrete_value_bound(spec, 4), b);
    EXPECT_LE(b, spec.value_bound());
}

TEST(ModulusTest, HeatTemporalGapsAtOrigin) {
    ScenarioParams p = testing::heat_params();
    p.half_width = 6.0;
    p.C0 = 37.0;
    Lower s(make_spec(p), testing::request(121, 6.0));
    const RegularityReport r = modulus_report(s.sol.field, s.spec, s.grid, 200, 5, true);
    ASSERT_EQ(r.temporal.size(), 200u);
    for (const ModulusSample& m : r.temporal) {
        EXPECT_EQ(m.n1, s.grid.origin());
        EXPECT_NEAR(m.distance, s.grid.dt * static_cast<double>(m.k2 - m.k1), 1e-12);
        EXPECT_NEAR(m.gap, m.distance, 1e-5);
        EXPECT_LE(m.distance, m.reference);
    }
    EXPECT_LE(r.temporal_constant, 1.0 + 1e-5);
    EXPECT_TRUE(r.temporal_passed);
}

TEST(ModulusTest, ConstantFieldFitsZero) {
    ScenarioParams p = testing::constant_params(2, 1.0);
    p.terminal = TerminalParams{"constant", 1.5, 0.0, 0.0};
    Lower s(make_spec(p), testing::request(21));
    const RegularityReport r = modulus_report(s.sol.field, s.spec, s.grid, 100, 3);
    for (const auto& m : r.spatial) EXPECT_EQ(m.gap, 0.0);
    for (const auto& m : r.temporal) EXPECT_EQ(m.gap, 0.0);
    EXPECT_EQ(r.spatial_constant, 0.0);
    EXPECT_EQ(r.temporal_constant, 0.0);
}

TEST(ModulusTest, SamplesAreReproducible) {
    Lower s(make_spec(testing::example81_params()), testing::request(21));
    const RegularityReport r = modulus_report(s.sol.field, s.spec, s.grid, 60, 11);
    for (const auto& m : r.spatial) {
        EXPECT_EQ(m.k1, m.k2);
        EXPECT_EQ(m.gap, std::abs(s.sol.field.value(m.k1, m.n1) - s.sol.field.value(m.k2, m.n2)));
        EXPECT_LE(m.gap, r.spatial_constant * m.reference * (1.0 + 1e-12));
    }
    for (const auto& m : r.temporal) {
        EXPECT_EQ(m.n1, m.n2);
        EXPECT_LT(m.k1, m.k2);
        EXPECT_EQ(m.gap, std::abs(s.sol.field.value(m.k1, m.n1) - s.sol.field.value(m.k2, m.n2)));
        EXPECT_LE(m.gap, r.temporal_constant * m.reference * (1.0 + 1e-12));
    }
    const RegularityReport again = modulus_report(s.sol.field, s.spec, s.grid, 60, 11);
    EXPECT_EQ(again.spatial_constant, r.spatial_constant);
    EXPECT_EQ(again.temporal_constant, r.temporal_constant);
}

TEST(ModulusTest, LargerProbeSetNeverLowersTheFit) {
    Lower s(make_spec(testing::example81_params()), testing::request(31));
    double prev_s = 0.0, prev_t = 0.0;
    for (std::size_t probes : {10u, 40u, 160u, 640u}) {
        const RegularityReport r = modulus_report(s.sol.field, s.spec, s.grid, probes, 99);
        EXPECT_GE(r.spatial_constant, prev_s);
        EXPECT_GE(r.temporal_constant, prev_t);
        prev_s = r.spatial_constant;
        prev_t = r.temporal_constant;
    }
    const RegularityReport a = modulus_report(s.sol.field, s.spec, s.grid, 10, 99);
    const RegularityReport b = modulus_report(s.sol.field, s.spec, s.grid, 30, 99);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(a.spatial[i].n1, b.spatial[i].n1);
        EXPECT_EQ(a.temporal[i].k2, b.temporal[i].k2);
    }
}

TEST(ModulusTest, Example81StableUnderRefinement) {
    Lower coarse(make_spec(testing::example81_params()), testing::request(41));
    Lower fine(make_spec(testing::example81_params()), testing::request(81));
    const RegularityReport rc = modulus_report(coarse.sol.field, coarse.spec, coarse.grid, 2000, 8);
    const RegularityReport rf = modulus_report(fine.sol.field, fine.spec, fine.grid, 2000, 8);
    const ModulusStability st = modulus_stability(rc, rf);
    EXPECT_TRUE(st.passed) << st.spatial_ratio << " " << st.temporal_ratio;
    EXPECT_GT(rc.spatial_constant, 0.0);
    EXPECT_GT(rc.temporal_constant, 0.0);
}

TEST(ModulusTest, StabilityFlagsDrift) {
    RegularityReport a, b;
    a.spatial_constant = 1.0;
    a.temporal_constant = 1.0;
    b.spatial_constant = 2.5;
    b.temporal_constant = 1.0;
    EXPECT_FALSE(modulus_stability(a, b).passed);
    b.spatial_constant = 0.6;
    EXPECT_TRUE(modulus_stability(a, b).passed);
}

TEST(AprioriTest, ZeroDataGivesZero) {
    ScenarioParams p = testing::constant_params(1, 1.0);
    const GameSpec spec = make_spec(p);
    const Grid g = build_grid(spec, testing::request(41));
    const TransitionKernel k(spec, g);
    const AprioriReport r = bsde_apriori(spec, g, k, 5, 1, 32);
    EXPECT_TRUE(r.passed);
    for (const AprioriTrial& t : r.trials) {
        EXPECT_EQ(t.i0, 0.0);
        EXPECT_EQ(t.sup_abs, 0.0);
        EXPECT_EQ(t.z_energy, 0.0);
    }
}

TEST(AprioriTest, ConstantDriverPlugsIntoBound) {
    ScenarioParams p = testing::constant_params(1, 0.3);
    p.driver = DriverParams{"linear", 2.0, 0.0, 0.0};
    p.C0 = 2.0;
    p.half_width = 6.0;
    const GameSpec spec = make_spec(p);
    const Grid g = build_grid(spec, testing::request(61, 6.0));
    const TransitionKernel k(spec, g);
    const AprioriReport r = bsde_apriori(spec, g, k, 12, 4, 64);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.growth, 1.0);
    for (const AprioriTrial& t : r.trials) {
        const double d = t.delta;
        EXPECT_LE(t.sup_abs, 2.0 * d + 1e-12);
        EXPECT_GE(t.sup_abs, 0.95 * 2.0 * d);
        EXPECT_LE(t.i0, 2.0 * std::sqrt(d) + 1e-12);
        EXPECT_GE(t.i0, 0.95 * 2.0 * std::sqrt(d));
        // C_9 (E η²)^½ + C_9 √δ I0 with η = 0 and I0 ≈ 2√δ
        EXPECT_GE(t.short_bound, 2.0 * t.sup_abs);
    }
}

TEST(AprioriTest, Example81RandomPolicies) {
    const GameSpec spec = make_spec(testing::example81_params());
    const Grid g = build_grid(spec, testing::request(41));
    const TransitionKernel k(spec, g);
    const AprioriReport r = bsde_apriori(spec, g, k, 50, 2024, 128);
    EXPECT_EQ(r.trials.size(), 50u);
    EXPECT_TRUE(r.passed);
    EXPECT_TRUE(r.z_free_driver);
    for (const AprioriTrial& t : r.trials) {
        EXPECT_TRUE(t.energy_ok && t.short_ok) << t.seed;
        EXPECT_GT(t.i0, 0.0);
    }
}

TEST(AprioriTest, ThreadCountInvariant) {
    const GameSpec spec = make_spec(testing::example81_params());
    const Grid g = build_grid(spec, testing::request(21));
    const TransitionKernel k(spec, g);
    const AprioriReport a = bsde_apriori(spec, g, k, 4, 9, 32, Parallelism{1});
    const AprioriReport b = bsde_apriori(spec, g, k, 4, 9, 32, Parallelism{4});
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        EXPECT_EQ(a.trials[i].i0, b.trials[i].i0);
        EXPECT_EQ(a.trials[i].sup_sq, b.trials[i].sup_sq);
        EXPECT_EQ(a.trials[i].z_energy, b.trials[i].z_energy);
    }
}

TEST(AprioriTest, RejectsEmptyRuns) {
    const GameSpec spec = make_spec(testing::example81_params());
    const Grid g = build_grid(spec, testing::request(11));
    const TransitionKernel k(spec, g);
    EXPECT_THROW(bsde_apriori(spec, g, k, 0, 1), ValidationError);
}

}  // namespace
}  // namespace sdg
