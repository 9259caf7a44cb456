#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sdg/chain.hpp"
#include "sdg/dpp.hpp"
#include "sdg/errors.hpp"
#include "sdg/model.hpp"
#include "sdg/parallel.hpp"
#include "sdg/policy.hpp"

namespace sdg {

struct BoundReport {
    double bound = 0.0;
    double max_abs = 0.0;
    long worst_slice = 0;
    std::size_t worst_node = 0;
    double worst_value = 0.0;
    std::size_t violations = 0;
    bool passed = true;
};

inline BoundReport check_bounds(const ValueField& field, const GameSpec& spec) {
    if (field.n_t < 1 || field.values.size() != static_cast<std::size_t>(field.n_t + 1) * field.nodes)
        throw ValidationError("check_bounds needs a solved field");
    BoundReport r;
    r.bound = discrete_value_bound(spec, field.n_t);
    for (long k = 0; k <= field.n_t; ++k)
        for (std::size_t n = 0; n < field.nodes; ++n) {
            const double v = field.value(k, n);
            const double a = std::abs(v);
            if (!(a <= r.bound * (1.0 + 1e-14))) ++r.violations;
            if (a > r.max_abs || std::isnan(v)) {
                r.max_abs = std::isnan(v) ? std::numeric_limits<double>::infinity() : a;
                r.worst_slice = k;
                r.worst_node = n;
                r.worst_value = v;
            }
        }
    r.passed = r.violations == 0;
    return r;
}

struct ModulusSample {
    long k1 = 0, k2 = 0;          // slices (equal for spatial samples)
    std::size_t n1 = 0, n2 = 0;   // nodes (equal for temporal samples)
    double distance = 0.0;        // |x1 - x2| (+ |aug diff|) or |t1 - t2|
    double gap = 0.0;             // |V(k1, n1) - V(k2, n2)|
    double reference = 0.0;       // ρ0(distance) or ρ1(distance)
};

struct RegularityReport {
    std::size_t probes = 0;
    std::uint64_t seed = 0;
    std::vector<ModulusSample> spatial;
    std::vector<ModulusSample> temporal;
    double spatial_constant = 0.0;   // smallest C with gap ≤ C ρ0 on every spatial sample
    double temporal_constant = 0.0;  // smallest C with gap ≤ C ρ1 on every temporal sample
    bool spatial_passed = true;      // fitted constant is finite
    bool temporal_passed = true;
};

namespace detail {

// ρ0 of the spec, or the identity when the spec declares a zero modulus.
inline double reference_rho0(const GameSpec& spec, double r) {
    const double v = spec.coeffs.rho0(r);
    return v > 0.0 ? v : r;
}

inline double reference_rho1(const GameSpec& spec, double delta) {
    const double q = std::pow(delta, 0.25);
    return reference_rho0(spec, delta + q) + delta + q;
}

inline double fit(std::vector<ModulusSample>& samples, bool& finite) {
    double c = 0.0;
    finite = true;
    for (const auto& s : samples) {
        if (s.gap == 0.0) continue;
        if (!(s.reference > 0.0)) {
            finite = false;
            return std::numeric_limits<double>::infinity();
        }
        c = std::max(c, s.gap / s.reference);
    }
    return c;
}

}  // namespace detail

// Random node pairs within a slice (spatial) and slice pairs at a fixed node
// (temporal) over the reach box. Each family is drawn from its own sequential
// stream, so a larger probe count extends the same sample list.
inline RegularityReport modulus_report(const ValueField& field, const GameSpec& spec, const Grid& grid,
                                       std::size_t probes, std::uint64_t seed, bool temporal_at_origin = false) {
    if (probes < 1) throw ValidationError("modulus_report needs at least one probe");
    if (field.nodes != grid.node_count() || field.n_t != grid.n_t)
        throw ValidationError("field does not live on the given grid");
    const std::vector<std::size_t> nodes = reach_nodes(grid);
    if (nodes.size() < 2) throw ValidationError("grid too coarse for modulus probing");
    RegularityReport r;
    r.probes = probes;
    r.seed = seed;
    std::mt19937_64 srng(seed), trng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::uniform_int_distribution<long> slice(0, grid.n_t);

    for (std::size_t i = 0; i < probes; ++i) {
        ModulusSample s;
        s.k1 = s.k2 = slice(srng);
        s.n1 = nodes[pick(srng)];
        do s.n2 = nodes[pick(srng)];
        while (s.n2 == s.n1);
        const State a = grid.state(s.n1), b = grid.state(s.n2);
        double d2 = 0.0;
        for (int j = 0; j < grid.dim; ++j) d2 += (a.x[j] - b.x[j]) * (a.x[j] - b.x[j]);
        s.distance = std::sqrt(d2) + std::abs(a.aug - b.aug);
        s.gap = std::abs(field.value(s.k1, s.n1) - field.value(s.k2, s.n2));
        s.reference = detail::reference_rho0(spec, s.distance);
        r.spatial.push_back(s);
    }
    for (std::size_t i = 0; i < probes; ++i) {
        ModulusSample s;
        s.n1 = s.n2 = temporal_at_origin ? grid.origin() : nodes[pick(trng)];
        s.k1 = slice(trng);
        do s.k2 = slice(trng);
        while (s.k2 == s.k1);
        if (s.k1 > s.k2) std::swap(s.k1, s.k2);
        s.distance = grid.time(s.k2) - grid.time(s.k1);
        s.gap = std::abs(field.value(s.k1, s.n1) - field.value(s.k2, s.n2));
        s.reference = detail::reference_rho1(spec, s.distance);
        r.temporal.push_back(s);
    }
    r.spatial_constant = detail::fit(r.spatial, r.spatial_passed);
    r.temporal_constant = detail::fit(r.temporal, r.temporal_passed);
    return r;
}

struct ModulusStability {
    double spatial_ratio = 1.0;   // fine / coarse fitted constant
    double temporal_ratio = 1.0;
    bool passed = true;
};

// Fitted constants of two resolutions agree within `factor`.
inline ModulusStability modulus_stability(const RegularityReport& coarse, const RegularityReport& fine,
                                          double factor = 2.0) {
    auto ratio = [](double c, double f) {
        if (c == 0.0 && f == 0.0) return 1.0;
        if (c == 0.0) return std::numeric_limits<double>::infinity();
        return f / c;
    };
    ModulusStability s;
    s.spatial_ratio = ratio(coarse.spatial_constant, fine.spatial_constant);
    s.temporal_ratio = ratio(coarse.temporal_constant, fine.temporal_constant);
    auto within = [factor](double q) { return q <= factor && q >= 1.0 / factor; };
    s.passed = coarse.spatial_passed && fine.spatial_passed && coarse.temporal_passed && fine.temporal_passed &&
               within(s.spatial_ratio) && within(s.temporal_ratio);
    return s;
}

struct AprioriTrial {
    std::uint64_t seed = 0;
    long start_slice = 0;
    std::size_t start_node = 0;
    double delta = 0.0;        // T - t_start
    double i0 = 0.0;           // (E[η² + Σ dt f(·,0,0)²])^½ along the chain
    double eta_l2 = 0.0;       // (E η²)^½
    double sup_sq = 0.0;       // Monte Carlo E max_k Y_k²
    double sup_abs = 0.0;      // Monte Carlo E max_k |Y_k|
    double z_energy = 0.0;     // E Σ dt |ẑ_k|², exact
    double c_energy = 0.0;
    double energy_bound = 0.0;     // C_8 · I0²
    double short_bound = 0.0;      // C_9 · ((E η²)^½ + √δ I0)
    bool energy_ok = true;
    bool short_ok = true;
};

struct AprioriReport {
    double growth = 1.0;         // G = (1 + dt L0)^n_t
    double c_short = 0.0;        // 2 G
    bool z_free_driver = true;   // constants are derived for drivers without z
    std::size_t paths = 0;
    std::vector<AprioriTrial> trials;
    bool passed = true;
};

namespace detail {

// out_k = E_k[out_{k+1}] + dt·running(k, n), frozen at absorbing nodes.
template <class Running>
std::vector<double> linear_backward(const TransitionKernel& kernel, const Policy& up, const Policy& vp,
                                    std::vector<double> terminal, long k_stop, Running running, const Parallelism& par) {
    const Grid& g = kernel.grid();
    std::vector<double> cur = std::move(terminal), prev(cur.size());
    for (long k = g.n_t - 1; k >= k_stop; --k) {
        parallel_for(g.node_count(), par, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                if (kernel.absorbing(n)) {
                    prev[n] = cur[n];
                    continue;
                }
                prev[n] = kernel.moments(cur, n, k, up.at(k, n), vp.at(k, n), false).mean + g.dt * running(k, n);
            }
        });
        std::swap(cur, prev);
    }
    return cur;
}

}  // namespace detail

// Discrete analogues of the a-priori BSDE estimates under random feedback
// policy pairs, started at a random slice (horizon δ = T - t_k) and a random
// reach-box node:
//   E max|Y|² + E Σ dt|ẑ|² ≤ C_8 I0²,   E max|Y| ≤ C_9 ((E η²)^½ + √δ I0).
// Doob's inequality on the dominating martingale of |Y| gives
// C_8 = 8G² m + (1 + 2dt) + (1 + 2L0 + 2dt L0²) δ 8G² m with m = max(1, δ),
// and C_9 = 2G.
inline AprioriReport bsde_apriori(const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel,
                                  std::size_t trials, std::uint64_t seed, std::size_t paths = 256,
                                  const Parallelism& par = {}) {
    if (trials < 1) throw ValidationError("bsde_apriori needs at least one trial");
    if (paths < 1) throw ValidationError("bsde_apriori needs at least one path");
    const std::vector<std::size_t> nodes = reach_nodes(grid);
    if (nodes.empty()) throw ValidationError("grid too coarse for the a-priori suite");
    AprioriReport rep;
    const double L0 = spec.coeffs.L0, dt = grid.dt;
    rep.growth = std::pow(1.0 + dt * L0, static_cast<double>(grid.n_t));
    const double g2 = rep.growth * rep.growth;
    rep.c_short = 2.0 * rep.growth;
    rep.z_free_driver = !spec.coeffs.driver_uses_z;
    rep.paths = paths;

    std::vector<double> eta(grid.node_count()), eta_sq(grid.node_count());
    detail::terminal_slice(spec, grid, eta);
    for (std::size_t n = 0; n < eta.size(); ++n) eta_sq[n] = eta[n] * eta[n];

    for (std::size_t t = 0; t < trials; ++t) {
        AprioriTrial tr;
        tr.seed = seed + 3 * t;
        std::mt19937_64 rng(tr.seed);
        tr.start_slice = std::uniform_int_distribution<long>(0, grid.n_t - 1)(rng);
        tr.start_node = nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
        tr.delta = spec.T - grid.time(tr.start_slice);
        const Policy up = random_policy(spec.U, grid, tr.seed + 1);
        const Policy vp = random_policy(spec.V, grid, tr.seed + 2);
        const ValueField y = evaluate_policies(spec, grid, kernel, up, vp, par);

        auto f0_sq = [&](long k, std::size_t n) {
            const double f = spec.coeffs.f(grid.time(k), grid.state(n), 0.0, Vec{}, spec.U[up.at(k, n)],
                                           spec.V[vp.at(k, n)]);
            return f * f;
        };
        auto z_sq = [&](long k, std::size_t n) {
            const Vec zh = vec_mat(y.gradient(k, n), kernel.sigma(k, up.at(k, n), vp.at(k, n)));
            return dot(zh, zh, grid.dim);
        };
        const auto zero = [](long, std::size_t) { return 0.0; };
        const double i0_sq =
            detail::linear_backward(kernel, up, vp, eta_sq, tr.start_slice, f0_sq, par)[tr.start_node];
        const double eta2 = detail::linear_backward(kernel, up, vp, eta_sq, tr.start_slice, zero, par)[tr.start_node];
        tr.z_energy = detail::linear_backward(kernel, up, vp, std::vector<double>(grid.node_count(), 0.0),
                                              tr.start_slice, z_sq, par)[tr.start_node];
        tr.i0 = std::sqrt(i0_sq);
        tr.eta_l2 = std::sqrt(eta2);

        double s_sq = 0.0, s_abs = 0.0;
        for (std::size_t p = 0; p < paths; ++p) {
            std::size_t node = tr.start_node;
            double mx = std::abs(y.value(tr.start_slice, node));
            std::mt19937_64 prng(tr.seed * 1000003ULL + p);
            for (long k = tr.start_slice; k < grid.n_t; ++k) {
                node = kernel.step(node, k, up.at(k, node), vp.at(k, node), prng);
                mx = std::max(mx, std::abs(y.value(k + 1, node)));
            }
            s_sq += mx * mx;
            s_abs += mx;
        }
        tr.sup_sq = s_sq / static_cast<double>(paths);
        tr.sup_abs = s_abs / static_cast<double>(paths);

        const double m = std::max(1.0, tr.delta);
        tr.c_energy = 8.0 * g2 * m + (1.0 + 2.0 * dt) + (1.0 + 2.0 * L0 + 2.0 * dt * L0 * L0) * tr.delta * 8.0 * g2 * m;
        tr.energy_bound = tr.c_energy * i0_sq;
        tr.short_bound = rep.c_short * (tr.eta_l2 + std::sqrt(tr.delta) * tr.i0);
        const double slack = 1e-12 * (1.0 + tr.energy_bound);
        tr.energy_ok = tr.sup_sq + tr.z_energy <= tr.energy_bound + slack;
        tr.short_ok = tr.sup_abs <= tr.short_bound + 1e-12 * (1.0 + tr.short_bound);
        rep.passed = rep.passed && tr.energy_ok && tr.short_ok;
        rep.trials.push_back(tr);
    }
    return rep;
}

}  // namespace sdg
