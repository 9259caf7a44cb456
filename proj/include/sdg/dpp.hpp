#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sdg/chain.hpp"
#include "sdg/errors.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/model.hpp"
#include "sdg/parallel.hpp"
#include "sdg/policy.hpp"

namespace sdg {

enum class Side { lower, upper };
enum class Problem { lower, upper, fixed_policy };

inline const char* to_string(Problem p) {
    switch (p) {
        case Problem::lower: return "lower";
        case Problem::upper: return "upper";
        default: return "fixed_policy";
    }
}

// Value tables per time slice k = 0..n_t with companion gradient estimates.
struct ValueField {
    Problem problem = Problem::lower;
    int dim = 1;
    long n_t = 0;
    std::size_t nodes = 0;
    std::vector<double> values;  // [k * nodes + node]
    std::vector<double> z;       // [(k * nodes + node) * dim + i]
    std::size_t z_fallbacks = 0;  // nodes where the covariance was singular

    ValueField() = default;
    ValueField(Problem p, const Grid& g)
        : problem(p),
          dim(g.dim),
          n_t(g.n_t),
          nodes(g.node_count()),
          values(static_cast<std::size_t>(g.n_t + 1) * g.node_count(), 0.0),
          z(static_cast<std::size_t>(g.n_t + 1) * g.node_count() * g.dim, 0.0) {}

    std::span<const double> slice(long k) const { return {values.data() + static_cast<std::size_t>(k) * nodes, nodes}; }
    std::span<double> slice(long k) { return {values.data() + static_cast<std::size_t>(k) * nodes, nodes}; }
    double value(long k, std::size_t node) const { return values[static_cast<std::size_t>(k) * nodes + node]; }
    Vec gradient(long k, std::size_t node) const {
        Vec g{};
        for (int i = 0; i < dim; ++i) g[i] = z[(static_cast<std::size_t>(k) * nodes + node) * dim + i];
        return g;
    }
};

// Sup-norm bound of the explicit scheme with n_t slices:
// B_n = C0, B_k = (1 + dt L0) B_{k+1} + dt C0. Never exceeds spec.value_bound().
inline double discrete_value_bound(const GameSpec& spec, long n_t) {
    const double dt = spec.T / static_cast<double>(n_t);
    double b = spec.coeffs.C0;
    for (long k = 0; k < n_t; ++k) b = (1.0 + dt * spec.coeffs.L0) * b + dt * spec.coeffs.C0;
    return b;
}

inline double discrete_value_bound(const GameSpec& spec, const Grid& g) { return discrete_value_bound(spec, g.n_t); }

struct StepResult {
    double y = 0.0;
    Vec z{};
    bool z_fallback = false;
};

// One explicit step of the discrete BSDE under the (iu, iv) stencil:
// m = E[V'], z = Cov(V', ΔX) Cov(ΔX)^-1, y = m + dt·f(t, x, m, z·σ, u, v).
inline StepResult one_step(std::span<const double> next, std::size_t node, long k, std::size_t iu, std::size_t iv,
                           const TransitionKernel& kernel, const GameSpec& spec, bool need_z = true) {
    const Grid& g = kernel.grid();
    StepResult r;
    if (kernel.absorbing(node)) {
        r.y = next[node];
        return r;
    }
    const bool want_z = need_z || spec.coeffs.driver_uses_z;
    const Moments mom = kernel.moments(next, node, k, iu, iv, want_z);
    if (want_z) {
        const Mat& cov = kernel.stencil(k, iu, iv).cov;
        const Vec dx = g.dx();
        bool singular;
        if (g.dim == 1) {
            singular = cov[0][0] <= 1e-13 * dx[0] * dx[0];
            if (!singular) r.z[0] = mom.cross[0] / cov[0][0];
        } else {
            const double det = determinant(cov, 2);
            singular = det <= 1e-13 * dx[0] * dx[0] * dx[1] * dx[1];
            if (!singular) {
                r.z[0] = (cov[1][1] * mom.cross[0] - cov[1][0] * mom.cross[1]) / det;
                r.z[1] = (cov[0][0] * mom.cross[1] - cov[0][1] * mom.cross[0]) / det;
            }
        }
        if (singular) {
            r.z_fallback = true;
            for (int i = 0; i < g.dim; ++i) r.z[i] = (next[node + g.stride(i)] - next[node]) / dx[i];
        }
    }
    const double t = g.time(k);
    const Vec zhat = want_z ? vec_mat(r.z, kernel.sigma(k, iu, iv)) : Vec{};
    r.y = mom.mean + g.dt * spec.coeffs.f(t, g.state(node), mom.mean, zhat, spec.U[iu], spec.V[iv]);
    return r;
}

namespace detail {

inline void terminal_slice(const GameSpec& spec, const Grid& g, std::span<double> out) {
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = spec.coeffs.xi(g.state(n));
}

inline void store_z(std::span<double> zs, std::size_t node, int dim, const Vec& z) {
    for (int i = 0; i < dim; ++i) zs[node * dim + i] = z[i];
}

// Fills slice k from slice k+1 by sup-inf (lower) or inf-sup (upper).
inline std::size_t game_slice(const GameSpec& spec, const TransitionKernel& kernel, Side side, long k,
                              std::span<const double> next, std::span<double> out, std::span<double> zs, Policy* up,
                              Policy* vp, const Parallelism& par) {
    const Grid& g = kernel.grid();
    const std::size_t nu = spec.U.size(), nv = spec.V.size();
    std::atomic<std::size_t> fallbacks{0};
    parallel_for(g.node_count(), par, [&](std::size_t begin, std::size_t end) {
        std::vector<double> table(nu * nv);
        std::size_t local = 0;
        for (std::size_t n = begin; n < end; ++n) {
            if (kernel.absorbing(n)) {
                out[n] = spec.coeffs.xi(g.state(n));
                store_z(zs, n, g.dim, Vec{});
                continue;
            }
            for (std::size_t i = 0; i < nu; ++i)
                for (std::size_t j = 0; j < nv; ++j) table[i * nv + j] = one_step(next, n, k, i, j, kernel, spec, false).y;
            const MinimaxResult mm = minimax(table, nu, nv);
            const std::size_t cu = side == Side::lower ? mm.lower_u : mm.upper_u;
            const std::size_t cv = side == Side::lower ? mm.lower_v : mm.upper_v;
            const StepResult chosen = one_step(next, n, k, cu, cv, kernel, spec, true);
            out[n] = side == Side::lower ? mm.lower : mm.upper;
            store_z(zs, n, g.dim, chosen.z);
            local += chosen.z_fallback ? 1 : 0;
            if (up) up->at(k, n) = static_cast<std::uint16_t>(cu);
            if (vp) vp->at(k, n) = static_cast<std::uint16_t>(cv);
        }
        fallbacks += local;
    });
    return fallbacks;
}

inline std::size_t policy_slice(const GameSpec& spec, const TransitionKernel& kernel, long k,
                                std::span<const double> next, std::span<double> out, std::span<double> zs,
                                const Policy& up, const Policy& vp, const Parallelism& par) {
    const Grid& g = kernel.grid();
    std::atomic<std::size_t> fallbacks{0};
    parallel_for(g.node_count(), par, [&](std::size_t begin, std::size_t end) {
        std::size_t local = 0;
        for (std::size_t n = begin; n < end; ++n) {
            if (kernel.absorbing(n)) {
                out[n] = spec.coeffs.xi(g.state(n));
                store_z(zs, n, g.dim, Vec{});
                continue;
            }
            const StepResult r = one_step(next, n, k, up.at(k, n), vp.at(k, n), kernel, spec, true);
            out[n] = r.y;
            store_z(zs, n, g.dim, r.z);
            local += r.z_fallback ? 1 : 0;
        }
        fallbacks += local;
    });
    return fallbacks;
}

inline void check_policies(const GameSpec& spec, const Grid& g, const Policy& up, const Policy& vp) {
    if (!up.total_on(g) || !vp.total_on(g)) throw ValidationError("policies are not defined on the whole grid");
    up.validate(spec.U);
    vp.validate(spec.V);
}

}  // namespace detail

struct GameSolution {
    ValueField field;
    Policy u_policy;  // maximizer's choice
    Policy v_policy;  // minimizer's choice
};

// Backward recursion from ξ: lower side takes max_u min_v of one_step, upper
// side min_v max_u. The returned policies are the optimizing controls.
inline GameSolution solve_game(const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel, Side side,
                               const Parallelism& par = {}) {
    GameSolution sol{ValueField(side == Side::lower ? Problem::lower : Problem::upper, grid),
                     Policy(spec.U.id(), grid.n_t, grid.node_count()),
                     Policy(spec.V.id(), grid.n_t, grid.node_count())};
    ValueField& f = sol.field;
    detail::terminal_slice(spec, grid, f.slice(grid.n_t));
    const std::size_t zw = grid.node_count() * grid.dim;
    for (long k = grid.n_t - 1; k >= 0; --k) {
        std::span<double> zs(f.z.data() + static_cast<std::size_t>(k) * zw, zw);
        f.z_fallbacks += detail::game_slice(spec, kernel, side, k, f.slice(k + 1), f.slice(k), zs, &sol.u_policy,
                                            &sol.v_policy, par);
    }
    return sol;
}

// Game recursion from an arbitrary terminal slice at k_terminal down to k_stop.
inline std::vector<double> backward_game(const GameSpec& spec, const TransitionKernel& kernel, Side side,
                                         std::vector<double> terminal, long k_terminal, long k_stop,
                                         const Parallelism& par = {}) {
    const Grid& g = kernel.grid();
    std::vector<double> cur = std::move(terminal), prev(cur.size());
    std::vector<double> zs(cur.size() * g.dim);
    for (long k = k_terminal - 1; k >= k_stop; --k) {
        detail::game_slice(spec, kernel, side, k, cur, prev, zs, nullptr, nullptr, par);
        std::swap(cur, prev);
    }
    return cur;
}

// The discrete BSDE with controls read from fixed feedback policies.
inline ValueField evaluate_policies(const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel,
                                    const Policy& u_policy, const Policy& v_policy, const Parallelism& par = {}) {
    detail::check_policies(spec, grid, u_policy, v_policy);
    ValueField f(Problem::fixed_policy, grid);
    detail::terminal_slice(spec, grid, f.slice(grid.n_t));
    const std::size_t zw = grid.node_count() * grid.dim;
    for (long k = grid.n_t - 1; k >= 0; --k) {
        std::span<double> zs(f.z.data() + static_cast<std::size_t>(k) * zw, zw);
        f.z_fallbacks += detail::policy_slice(spec, kernel, k, f.slice(k + 1), f.slice(k), zs, u_policy, v_policy, par);
    }
    return f;
}

// Fixed-policy recursion from a terminal slice at k_terminal down to k_stop.
inline std::vector<double> backward_policies(const GameSpec& spec, const TransitionKernel& kernel,
                                             const Policy& u_policy, const Policy& v_policy,
                                             std::vector<double> terminal, long k_terminal, long k_stop,
                                             const Parallelism& par = {}) {
    const Grid& g = kernel.grid();
    detail::check_policies(spec, g, u_policy, v_policy);
    std::vector<double> cur = std::move(terminal), prev(cur.size());
    std::vector<double> zs(cur.size() * g.dim);
    for (long k = k_terminal - 1; k >= k_stop; --k) {
        detail::policy_slice(spec, kernel, k, cur, prev, zs, u_policy, v_policy, par);
        std::swap(cur, prev);
    }
    return cur;
}

// Multilinear interpolation of a value slice at spatial point x (augmented
// coordinate held at the origin's index). Points outside the box are clamped.
inline double interpolate_slice(std::span<const double> slice, const Grid& g, const Vec& x) {
    std::array<int, kMaxDim> base{0, 0};
    std::array<double, kMaxDim> w{0.0, 0.0};
    for (int i = 0; i < g.dim; ++i) {
        const Axis& ax = g.axes[i];
        const double p = std::clamp((x[i] - ax.lo) / ax.dx, 0.0, static_cast<double>(ax.n - 1));
        base[i] = std::min(static_cast<int>(std::floor(p)), ax.n - 2);
        w[i] = p - base[i];
    }
    const int ia = g.decode(g.origin())[2];
    double acc = 0.0;
    for (int c0 = 0; c0 < 2; ++c0)
        for (int c1 = 0; c1 < (g.dim == 2 ? 2 : 1); ++c1) {
            double weight = c0 ? w[0] : 1.0 - w[0];
            if (g.dim == 2) weight *= c1 ? w[1] : 1.0 - w[1];
            if (weight == 0.0) continue;
            acc += weight * slice[g.encode(base[0] + c0, base[1] + c1, ia)];
        }
    return acc;
}

using SliceTransform = std::function<void(std::span<double>)>;

// Lower value by one full pass versus a pass to t_split whose slice
// (optionally transformed) is then used as terminal data for [0, t_split].
// Returns the max-abs deviation over the initial slice.
inline double dpp_consistency(const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel, long split_index,
                              const SliceTransform& transform = {}, const Parallelism& par = {}) {
    if (split_index <= 0 || split_index >= grid.n_t) throw ValidationError("split index must lie strictly inside (0, n_t)");
    std::vector<double> terminal(grid.node_count());
    detail::terminal_slice(spec, grid, terminal);
    const std::vector<double> full = backward_game(spec, kernel, Side::lower, terminal, grid.n_t, 0, par);
    std::vector<double> mid = backward_game(spec, kernel, Side::lower, terminal, grid.n_t, split_index, par);
    if (transform) transform(mid);
    const std::vector<double> recomposed = backward_game(spec, kernel, Side::lower, std::move(mid), split_index, 0, par);
    double dev = 0.0;
    for (std::size_t n = 0; n < full.size(); ++n) dev = std::max(dev, std::abs(full[n] - recomposed[n]));
    return dev;
}

}  // namespace sdg
