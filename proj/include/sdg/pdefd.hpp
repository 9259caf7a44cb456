#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sdg/dpp.hpp"
#include "sdg/errors.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/model.hpp"
#include "sdg/parallel.hpp"

namespace sdg {

enum class PdeSide { lower, upper, isaacs };

inline const char* to_string(PdeSide s) {
    switch (s) {
        case PdeSide::lower: return "lower";
        case PdeSide::upper: return "upper";
        default: return "isaacs";
    }
}

using LateralFn = std::function<double(double t, const State&)>;

// Dirichlet problem on the grid box: terminal ξ at T, lateral data on the
// box faces for t < T (default: ξ frozen in time).
struct PdeProblem {
    GameSpec spec;
    LateralFn lateral;
    double seam_tolerance = 1e-9;
    double ellipticity_floor = 0.0;  // c0²; ellipticity needs λ_min(σ²) > floor

    explicit PdeProblem(GameSpec s) : spec(std::move(s)) {}
};

struct EllipticityReport {
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    double t = 0.0;
    std::string u, v;  // witness of the minimum
    bool passed = false;
};

inline EllipticityReport ellipticity_check(const GameSpec& spec, double floor = 0.0, int time_samples = 33) {
    EllipticityReport r;
    const int nt = spec.coeffs.time_homogeneous ? 1 : time_samples;
    for (int k = 0; k < nt; ++k) {
        const double t = nt == 1 ? 0.0 : spec.T * k / (nt - 1);
        for (std::size_t i = 0; i < spec.U.size(); ++i)
            for (std::size_t j = 0; j < spec.V.size(); ++j) {
                const double e = sym_eigenvalues(spec.coeffs.sigma_sq(t, spec.U[i], spec.V[j]), spec.dim)[0];
                if (e < r.min_eigenvalue) {
                    r.min_eigenvalue = e;
                    r.t = t;
                    r.u = spec.U.label(i);
                    r.v = spec.V.label(j);
                }
            }
    }
    r.passed = r.min_eigenvalue > floor;
    return r;
}

struct PdeSolution {
    ValueField field;
    PdeSide side = PdeSide::lower;
    double max_gap = 0.0;  // largest upper - lower discrete Hamiltonian seen
};

namespace detail {

// Linear part of the explicit step for one (t, u, v): off-centre weights
// (already multiplied by dt) over node offsets.
struct FdStencil {
    std::vector<std::ptrdiff_t> offsets;
    std::vector<double> weights;
    Mat sigma{};
};

inline FdStencil make_fd_stencil(const Grid& g, const Mat& a, const Vec& mu, const Mat& sigma) {
    FdStencil s;
    s.sigma = sigma;
    const Vec dx = g.dx();
    const double dt = g.dt;
    const double c = g.dim == 2 ? 0.5 * (a[0][1] + a[1][0]) : 0.0;
    auto add = [&](int s0, int s1, double w) {
        if (w == 0.0) return;
        s.offsets.push_back(s0 * static_cast<std::ptrdiff_t>(g.stride(0)) + s1 * static_cast<std::ptrdiff_t>(g.stride(1)));
        s.weights.push_back(w);
    };
    for (int i = 0; i < g.dim; ++i) {
        const double budget = std::max(a[i][i] - (g.dim == 2 ? std::abs(c) * dx[i] / dx[1 - i] : 0.0), 0.0);
        double plus = 0.5 * budget * dt / (dx[i] * dx[i]);
        double minus = plus;
        if (budget >= std::abs(mu[i]) * dx[i]) {
            plus += 0.5 * mu[i] * dt / dx[i];
            minus -= 0.5 * mu[i] * dt / dx[i];
        } else if (mu[i] > 0.0) {
            plus += mu[i] * dt / dx[i];
        } else {
            minus -= mu[i] * dt / dx[i];
        }
        add(i == 0 ? 1 : 0, i == 1 ? 1 : 0, plus);
        add(i == 0 ? -1 : 0, i == 1 ? -1 : 0, minus);
    }
    if (g.dim == 2 && c != 0.0) {
        const double q = std::abs(c) * dt / (2.0 * dx[0] * dx[1]);
        const int sgn = c > 0.0 ? 1 : -1;
        add(1, sgn, q);
        add(-1, -sgn, q);
    }
    return s;
}

}  // namespace detail

// Explicit monotone finite-difference scheme for the Isaacs equation
// -∂_t θ - G(t, x, θ, Dθ, D²θ) = 0 with Dirichlet data on the box faces.
class PdeSolver {
public:
    PdeSolver(PdeProblem problem, const Grid& grid) : problem_(std::move(problem)), grid_(grid) {
        const GameSpec& spec = problem_.spec;
        if (grid.scheme != Scheme::finite_difference)
            throw ValidationError("finite-difference solver needs a grid built for the finite-difference scheme");
        if (grid.aug_kind != AugKind::none)
            throw ValidationError("finite-difference solver handles Markovian states only (no augmented statistic)");
        const EllipticityReport e = ellipticity_check(spec, problem_.ellipticity_floor);
        if (!e.passed) {
            std::ostringstream os;
            os << "ellipticity violated: smallest eigenvalue of sigma^2 is " << e.min_eigenvalue << " at t=" << e.t
               << ", u=" << e.u << ", v=" << e.v;
            throw ValidationError(os.str());
        }
        if (!problem_.lateral) {
            const TerminalFn xi = spec.coeffs.xi;
            problem_.lateral = [xi](double, const State& s) { return xi(s); };
        }
        for (std::size_t n = 0; n < grid.node_count(); ++n) {
            if (!grid.boundary(n)) continue;
            const State st = grid.state(n);
            const double seam = std::abs(problem_.lateral(spec.T, st) - spec.coeffs.xi(st));
            if (seam > problem_.seam_tolerance) {
                std::ostringstream os;
                os << "lateral and terminal data disagree by " << seam << " at the corner seam, x=(" << st.x[0]
                   << ", " << st.x[1] << ")";
                throw ValidationError(os.str());
            }
        }
        const long slices = spec.coeffs.time_homogeneous ? 1 : grid.n_t;
        for (long k = 0; k < slices; ++k) {
            const double t = grid.time(k);
            for (std::size_t i = 0; i < spec.U.size(); ++i)
                for (std::size_t j = 0; j < spec.V.size(); ++j) {
                    const Mat a = spec.coeffs.sigma_sq(t, spec.U[i], spec.V[j]);
                    const Vec mu = spec.coeffs.effective_drift(t, spec.U[i], spec.V[j]);
                    double load;
                    try {
                        load = fd_load(grid.dim, a, mu, grid.dx(), grid.dt) + grid.dt * spec.coeffs.L0;
                    } catch (const StencilError& err) {
                        throw StencilError(std::string(err.what()) + " (u=" + spec.U.label(i) + ", v=" +
                                           spec.V.label(j) + ")");
                    }
                    if (load > 1.0 + 1e-12) {
                        std::ostringstream os;
                        os << "finite-difference step not monotone (centre weight " << 1.0 - load
                           << ") at u=" << spec.U.label(i) << ", v=" << spec.V.label(j);
                        throw CflError(os.str(), minimal_time_steps(spec, grid.dx(), Scheme::finite_difference));
                    }
                    stencils_.push_back(detail::make_fd_stencil(grid, a, mu, spec.coeffs.sigma(t, spec.U[i], spec.V[j])));
                }
        }
    }

    const Grid& grid() const { return grid_; }
    const PdeProblem& problem() const { return problem_; }

    PdeSolution solve(PdeSide side, const Parallelism& par = {}, double isaacs_tolerance = 1e-9) const {
        const GameSpec& spec = problem_.spec;
        const Grid& g = grid_;
        const Problem tag = side == PdeSide::upper ? Problem::upper : Problem::lower;
        PdeSolution sol{ValueField(tag, g), side, 0.0};
        ValueField& f = sol.field;
        detail::terminal_slice(spec, g, f.slice(g.n_t));
        const std::size_t nu = spec.U.size(), nv = spec.V.size();
        const std::size_t nodes = g.node_count();
        for (long k = g.n_t - 1; k >= 0; --k) {
            const std::span<const double> next = f.slice(k + 1);
            const std::span<double> out = f.slice(k);
            const double t = g.time(k);
            const std::size_t zoff = static_cast<std::size_t>(k) * nodes * g.dim;
            std::vector<double> gaps(nodes, 0.0);
            parallel_for(nodes, par, [&](std::size_t begin, std::size_t end) {
                std::vector<double> table(nu * nv);
                for (std::size_t n = begin; n < end; ++n) {
                    const State st = g.state(n);
                    if (g.boundary(n)) {
                        out[n] = problem_.lateral(t, st);
                        continue;
                    }
                    const double v0 = next[n];
                    Vec z{};
                    for (int i = 0; i < g.dim; ++i)
                        z[i] = (next[n + g.stride(i)] - next[n - g.stride(i)]) / (2.0 * g.axes[i].dx);
                    for (int i = 0; i < g.dim; ++i) f.z[zoff + n * g.dim + i] = z[i];
                    for (std::size_t iu = 0; iu < nu; ++iu)
                        for (std::size_t iv = 0; iv < nv; ++iv) {
                            const detail::FdStencil& s = stencil(k, iu, iv);
                            double lin = 0.0;
                            for (std::size_t q = 0; q < s.offsets.size(); ++q)
                                lin += s.weights[q] *
                                       (next[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n) + s.offsets[q])] - v0);
                            table[iu * nv + iv] =
                                lin + g.dt * spec.coeffs.f(t, st, v0, vec_mat(z, s.sigma), spec.U[iu], spec.V[iv]);
                        }
                    const MinimaxResult mm = minimax(table, nu, nv);
                    gaps[n] = mm.gap();
                    if (side == PdeSide::isaacs && mm.gap() > isaacs_tolerance * std::max(1.0, std::abs(mm.lower))) {
                        std::ostringstream os;
                        os << "discrete Hamiltonians differ by " << mm.gap() / g.dt << " at t=" << t << ", x=("
                           << st.x[0] << ", " << st.x[1] << "); solve the lower or upper equation instead";
                        throw RefusalError(os.str());
                    }
                    out[n] = v0 + (side == PdeSide::upper ? mm.upper : mm.lower);
                }
            });
            for (double gp : gaps) sol.max_gap = std::max(sol.max_gap, gp / g.dt);
        }
        return sol;
    }

private:
    const detail::FdStencil& stencil(long k, std::size_t iu, std::size_t iv) const {
        const std::size_t sk = problem_.spec.coeffs.time_homogeneous ? 0 : static_cast<std::size_t>(k);
        return stencils_[(sk * problem_.spec.U.size() + iu) * problem_.spec.V.size() + iv];
    }

    PdeProblem problem_;
    Grid grid_;
    std::vector<detail::FdStencil> stencils_;
};

inline PdeSolution solve_pde(const PdeProblem& problem, const Grid& grid, PdeSide side, const Parallelism& par = {}) {
    return PdeSolver(problem, grid).solve(side, par);
}

struct ProbeDeviation {
    Vec x{};
    double dpp = 0.0;
    double pde = 0.0;
    double deviation = 0.0;
};

struct CrossCheckReport {
    std::vector<ProbeDeviation> probes;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool tolerance_derived = false;  // from a coarse/fine refinement of both schemes
    bool passed = false;
};

namespace detail {

inline std::vector<Vec> default_probes(const Grid& g) {
    const double r = 0.25 * std::min(g.axes[0].hi(), g.dim == 2 ? g.axes[1].hi() : g.axes[0].hi());
    std::vector<Vec> p{{0.0, 0.0}, {r, 0.0}, {-r, 0.0}};
    if (g.dim == 2) {
        p.push_back({0.0, r});
        p.push_back({0.0, -r});
        p.push_back({r, -r});
    }
    return p;
}

inline int coarser(int points) {
    const int c = (points - 1) / 2 + 1;
    return c % 2 == 0 ? c + 1 : c;
}

inline GridRequest coarse_request(const GridRequest& r) {
    GridRequest c = r;
    c.n_t = 0;
    for (int& p : c.points) p = std::max(3, coarser(p));
    return c;
}

inline std::vector<double> dpp_probe_values(const GameSpec& spec, const GridRequest& req, const std::vector<Vec>& probes,
                                            const Parallelism& par) {
    GridRequest r = req;
    r.scheme = Scheme::markov_chain;
    const Grid g = build_grid(spec, r);
    const TransitionKernel kernel(spec, g);
    const std::vector<double> terminal = [&] {
        std::vector<double> v(g.node_count());
        terminal_slice(spec, g, v);
        return v;
    }();
    const std::vector<double> v0 = backward_game(spec, kernel, Side::lower, terminal, g.n_t, 0, par);
    std::vector<double> out;
    for (const Vec& x : probes) out.push_back(interpolate_slice(v0, g, x));
    return out;
}

inline std::vector<double> pde_probe_values(const GameSpec& spec, const GridRequest& req, const std::vector<Vec>& probes,
                                            const Parallelism& par) {
    GridRequest r = req;
    r.scheme = Scheme::finite_difference;
    const Grid g = build_grid(spec, r);
    const PdeSolution sol = solve_pde(PdeProblem(spec), g, PdeSide::isaacs, par);
    std::vector<double> out;
    for (const Vec& x : probes) out.push_back(interpolate_slice(sol.field.slice(0), g, x));
    return out;
}

}  // namespace detail

// Compares the lattice game value with the PDE solution at probe points.
// A non-positive tolerance is replaced by twice the sum of both schemes'
// coarse-to-fine changes at the probes.
inline CrossCheckReport cross_check(const GameSpec& spec, const GridRequest& dpp_request, const GridRequest& pde_request,
                                    double tolerance = 0.0, std::vector<Vec> probes = {}, const Parallelism& par = {},
                                    std::size_t isaacs_samples = 2000) {
    const IsaacsReport isaacs = isaacs_check(spec, isaacs_samples, 1e-10);
    if (!isaacs.passed) {
        std::ostringstream os;
        os << "cross-check refused: Isaacs condition fails (gap " << isaacs.max_gap << " at t=" << isaacs.witness.t
           << ", y=" << isaacs.witness.y << ", z=(" << isaacs.witness.z[0] << ", " << isaacs.witness.z[1]
           << ")); lower and upper equations differ";
        throw RefusalError(os.str());
    }
    GridRequest dr = dpp_request, pr = pde_request;
    dr.scheme = Scheme::markov_chain;
    pr.scheme = Scheme::finite_difference;
    if (probes.empty()) probes = detail::default_probes(build_grid(spec, dr));
    const std::vector<double> a = detail::dpp_probe_values(spec, dr, probes, par);
    const std::vector<double> b = detail::pde_probe_values(spec, pr, probes, par);
    CrossCheckReport rep;
    rep.tolerance = tolerance;
    if (!(tolerance > 0.0)) {
        const std::vector<double> ac = detail::dpp_probe_values(spec, detail::coarse_request(dr), probes, par);
        const std::vector<double> bc = detail::pde_probe_values(spec, detail::coarse_request(pr), probes, par);
        double est = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i)
            est = std::max(est, std::abs(a[i] - ac[i]) + std::abs(b[i] - bc[i]));
        rep.tolerance = 2.0 * est + 1e-12;
        rep.tolerance_derived = true;
    }
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        rep.probes.push_back({probes[i], a[i], b[i], d});
        rep.max_deviation = std::max(rep.max_deviation, d);
    }
    rep.passed = rep.max_deviation <= rep.tolerance;
    return rep;
}

}  // namespace sdg
