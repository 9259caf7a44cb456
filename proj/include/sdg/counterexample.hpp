#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sdg/chain.hpp"
#include "sdg/dpp.hpp"
#include "sdg/errors.hpp"
#include "sdg/parallel.hpp"
#include "sdg/scenarios.hpp"

namespace sdg {

// Two-player control-against-control game with X¹ = αB¹ + ∫u, X² = αB² + ∫v,
// U = [-1, 1], V = [-2, 2] and payoff J(u, v) = E|a + X¹_T - X²_T|.
struct CounterexampleParams {
    double alpha = 0.3;
    double a = 0.5;
    double T = 1.0;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20130412;
    std::size_t batch_paths = 8192;

    bool in_gap_regime() const { return alpha < std::sqrt(T / 2.0) && std::abs(a) <= T; }
    std::string regime() const { return in_gap_regime() ? "gap regime" : "outside gap regime"; }
    void validate() const {
        if (!(alpha >= 0.0)) throw ValidationError("alpha must be non-negative");
        if (!(T > 0.0)) throw ValidationError("horizon T must be positive");
        if (alpha > 0.0 && n_paths < 1000) throw ValidationError("Monte Carlo needs at least 1000 paths");
        if (batch_paths < 2) throw ValidationError("batch size must be at least 2");
    }
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;  // 0: computed exactly
};

// Deterministic open-loop control for the minimizer.
struct OpenLoopControl {
    enum class Kind { constant, sinusoid, bang_bang };
    std::string name;
    Kind kind = Kind::constant;
    double level = 0.0;      // constant value / sinusoid offset / first bang-bang level
    double amplitude = 0.0;  // sinusoid
    double cycles = 1.0;     // sinusoid periods over [0, T]
    double phase = 0.0;
    double switch_time = 0.0;  // bang-bang: level before, -level after

    double operator()(double t, double T) const {
        switch (kind) {
            case Kind::constant: return level;
            case Kind::sinusoid: return level + amplitude * std::sin(2.0 * std::numbers::pi * cycles * t / T + phase);
            default: return t < switch_time ? level : -level;
        }
    }

    double integral(double T) const {
        switch (kind) {
            case Kind::constant: return level * T;
            case Kind::sinusoid: {
                const double w = 2.0 * std::numbers::pi * cycles / T;
                return level * T + amplitude * (std::cos(phase) - std::cos(w * T + phase)) / w;
            }
            default: {
                const double s = std::clamp(switch_time, 0.0, T);
                return level * s - level * (T - s);
            }
        }
    }

    double sup_norm() const {
        switch (kind) {
            case Kind::sinusoid: return std::abs(level) + std::abs(amplitude);
            default: return std::abs(level);
        }
    }
};

inline std::vector<OpenLoopControl> default_candidates(const CounterexampleParams& p) {
    using K = OpenLoopControl::Kind;
    std::vector<OpenLoopControl> c;
    for (double v : {-2.0, -1.0, 0.0, p.a / p.T, 1.0, 2.0}) {
        OpenLoopControl ctl;
        ctl.kind = K::constant;
        ctl.level = std::clamp(v, -2.0, 2.0);
        ctl.name = "constant(" + std::to_string(ctl.level) + ")";
        c.push_back(ctl);
    }
    for (double cycles : {0.5, 1.0, 2.0})
        for (double phase : {0.0, std::numbers::pi / 2.0}) {
            OpenLoopControl ctl;
            ctl.kind = K::sinusoid;
            ctl.level = std::clamp(p.a / p.T, -1.0, 1.0);
            ctl.amplitude = 1.0;
            ctl.cycles = cycles;
            ctl.phase = phase;
            ctl.name = "sinusoid(cycles=" + std::to_string(cycles) + ",phase=" + std::to_string(phase) + ")";
            c.push_back(ctl);
        }
    for (double frac : {0.25, 0.5, 0.75})
        for (double level : {2.0, -2.0}) {
            OpenLoopControl ctl;
            ctl.kind = K::bang_bang;
            ctl.level = level;
            ctl.switch_time = frac * p.T;
            ctl.name = "bang_bang(level=" + std::to_string(level) + ",switch=" + std::to_string(ctl.switch_time) + ")";
            c.push_back(ctl);
        }
    return c;
}

namespace detail {

// Antithetic pairs (B, -B) of the terminal Brownian increments, generated
// per batch from a seed derived from (master seed, batch index).
struct TerminalDraws {
    std::vector<double> b1, b2;  // one entry per pair
};

inline TerminalDraws draw_terminal(const CounterexampleParams& p, const Parallelism& par) {
    const std::size_t pairs = (p.n_paths + 1) / 2;
    const std::size_t per_batch = std::max<std::size_t>(1, p.batch_paths / 2);
    const std::size_t batches = (pairs + per_batch - 1) / per_batch;
    TerminalDraws d;
    d.b1.resize(pairs);
    d.b2.resize(pairs);
    const double sd = std::sqrt(p.T);
    parallel_for(batches, par, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            std::seed_seq seq{static_cast<std::uint32_t>(p.seed), static_cast<std::uint32_t>(p.seed >> 32),
                              static_cast<std::uint32_t>(b), 0x5eedu};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> n(0.0, sd);
            const std::size_t lo = b * per_batch, hi = std::min(pairs, lo + per_batch);
            for (std::size_t i = lo; i < hi; ++i) {
                d.b1[i] = n(rng);
                d.b2[i] = n(rng);
            }
        }
    });
    return d;
}

// Mean and standard error of E|m + α(B¹ - B²)| over antithetic pair averages.
inline Estimate abs_payoff(double m, double alpha, const TerminalDraws& d) {
    const std::size_t n = d.b1.size();
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = alpha * (d.b1[i] - d.b2[i]);
        const double y = 0.5 * (std::abs(m + delta) + std::abs(m - delta));
        s += y;
        s2 += y * y;
    }
    Estimate e;
    e.mean = s / static_cast<double>(n);
    const double var = std::max(0.0, s2 / static_cast<double>(n) - e.mean * e.mean) * n / std::max<double>(1.0, n - 1.0);
    e.std_error = std::sqrt(var / static_cast<double>(n));
    e.paths = 2 * n;
    return e;
}

inline double sample_mean_b2(const TerminalDraws& d) {
    // Each antithetic pair contributes b - b = 0 exactly.
    double s = 0.0;
    for (double b : d.b2) s += b + (-b);
    return s / (2.0 * static_cast<double>(d.b2.size()));
}

}  // namespace detail

struct StrongLowerResult {
    Estimate estimate;
    double analytic_bound = 0.0;        // α√(2T)
    double gaussian_identity = 0.0;  // α E|N(0, 2T)| = α√(4T/π)
    std::string regime;
};

// J(u, u + a/T) for u ≡ 0: the matched minimizer cancels every drift, leaving α E|B¹_T - B²_T|.
inline StrongLowerResult strong_lower_estimate(const CounterexampleParams& p, const Parallelism& par = {}) {
    p.validate();
    StrongLowerResult r;
    r.analytic_bound = p.alpha * std::sqrt(2.0 * p.T);
    r.gaussian_identity = p.alpha * std::sqrt(4.0 * p.T / std::numbers::pi);
    r.regime = p.regime();
    OpenLoopControl matched;
    matched.level = p.a / p.T;
    const double m = p.a - matched.integral(p.T);
    if (p.alpha == 0.0) {
        r.estimate = Estimate{std::abs(m), 0.0, 0};
        return r;
    }
    r.estimate = detail::abs_payoff(m, p.alpha, detail::draw_terminal(p, par));
    return r;
}

struct CandidatePayoff {
    std::string name;
    double mean_x2 = 0.0;  // simulated E[X²_T]
    double u0 = 0.0;       // constant best response
    Estimate payoff;
    bool at_least_T = false;  // J ≥ T - 3·stderr
};

struct StrongUpperResult {
    std::vector<CandidatePayoff> candidates;
    Estimate minimum;      // smallest candidate payoff
    std::string argmin;
    bool all_at_least_T = true;
};

// For every candidate v, the constant u0 = sign(a - E X²_T) (u0 = 1 on ties)
// yields J(u0, v) ≥ T + |a - E X²_T|.
inline StrongUpperResult strong_upper_estimate(const CounterexampleParams& p,
                                               const std::vector<OpenLoopControl>& candidates,
                                               const Parallelism& par = {}) {
    p.validate();
    if (candidates.empty()) throw ValidationError("no minimizer candidates supplied");
    for (const OpenLoopControl& c : candidates)
        if (c.sup_norm() > 2.0 + 1e-12)
            throw ValidationError("candidate " + c.name + " leaves the minimizer's control set |v| <= 2");
    std::optional<detail::TerminalDraws> draws;
    if (p.alpha > 0.0) draws = detail::draw_terminal(p, par);
    StrongUpperResult r;
    for (const OpenLoopControl& c : candidates) {
        CandidatePayoff cp;
        cp.name = c.name;
        const double drift2 = c.integral(p.T);
        cp.mean_x2 = drift2 + (draws ? p.alpha * detail::sample_mean_b2(*draws) : 0.0);
        const double gap = p.a - cp.mean_x2;
        cp.u0 = gap != 0.0 ? (gap > 0.0 ? 1.0 : -1.0) : 1.0;
        const double m = p.a + cp.u0 * p.T - drift2;
        cp.payoff = draws ? detail::abs_payoff(m, p.alpha, *draws) : Estimate{std::abs(m), 0.0, 0};
        cp.at_least_T = cp.payoff.mean >= p.T - 3.0 * cp.payoff.std_error;
        r.all_at_least_T = r.all_at_least_T && cp.at_least_T;
        if (r.candidates.empty() || cp.payoff.mean < r.minimum.mean) {
            r.minimum = cp.payoff;
            r.argmin = cp.name;
        }
        r.candidates.push_back(std::move(cp));
    }
    return r;
}

// Weak-formulation counterpart on the lattice. C0 caps ξ at the largest
// |a + X¹ - X²| the controls can reach plus a 4-standard-deviation margin.
inline ScenarioParams counterexample_scenario(const CounterexampleParams& p) {
    ScenarioParams s;
    s.family = "example81";
    s.alpha = p.alpha;
    s.a = p.a;
    s.T = p.T;
    s.C0 = std::abs(p.a) + 3.0 * p.T + 4.0 * p.alpha * std::sqrt(2.0 * p.T);
    return s;
}

struct WeakLevel {
    int points = 0;
    long n_t = 0;
    double dx = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double difference() const { return std::abs(upper - lower); }
};

inline WeakLevel weak_values(const GameSpec& spec, int points, const Parallelism& par = {}) {
    GridRequest r;
    r.points = {points, points};
    const Grid g = build_grid(spec, r);
    const TransitionKernel kernel(spec, g);
    std::vector<double> terminal(g.node_count());
    detail::terminal_slice(spec, g, terminal);
    WeakLevel w;
    w.points = points;
    w.n_t = g.n_t;
    w.dx = g.axes[0].dx;
    w.lower = backward_game(spec, kernel, Side::lower, terminal, g.n_t, 0, par)[g.origin()];
    w.upper = backward_game(spec, kernel, Side::upper, terminal, g.n_t, 0, par)[g.origin()];
    return w;
}

struct GapReport {
    CounterexampleParams params;
    std::string regime;
    StrongLowerResult lower;
    StrongUpperResult upper;
    double strong_upper_bound = 0.0;  // T, proven for every minimizer control
    double strong_gap = 0.0;          // T - strong lower estimate
    double required_gap = 0.0;        // T - α√(2T) - 3·stderr
    bool gap_ok = true;               // only asserted inside the gap regime
    std::vector<WeakLevel> weak;      // coarse, then refined
    bool weak_shrinks = true;         // fine difference ≤ coarse difference / 2
};

inline GapReport gap_report(const CounterexampleParams& p, const StrongLowerResult& lower,
                            const StrongUpperResult& upper, std::vector<WeakLevel> weak) {
    GapReport g;
    g.params = p;
    g.regime = p.regime();
    g.lower = lower;
    g.upper = upper;
    g.strong_upper_bound = p.T;
    g.strong_gap = p.T - lower.estimate.mean;
    g.required_gap = p.T - lower.analytic_bound - 3.0 * lower.estimate.std_error;
    g.gap_ok = !p.in_gap_regime() || (g.strong_gap > 0.0 && g.strong_gap >= g.required_gap && upper.all_at_least_T);
    for (std::size_t i = 1; i < weak.size(); ++i)
        g.weak_shrinks = g.weak_shrinks && weak[i].difference() <= weak[i - 1].difference() / 2.0;
    g.weak = std::move(weak);
    return g;
}

}  // namespace sdg
