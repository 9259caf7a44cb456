#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/linalg.hpp"
#include "sdg/model.hpp"

namespace sdg {

// Exhaustive sup-inf / inf-sup over a |U| x |V| payoff table (row-major,
// payoff[iu * nv + iv]). Ties resolve to the lowest index.
struct MinimaxResult {
    double lower = 0.0;  // max_u min_v
    double upper = 0.0;  // min_v max_u
    std::size_t lower_u = 0, lower_v = 0;
    std::size_t upper_u = 0, upper_v = 0;
    double gap() const { return upper - lower; }
};

inline MinimaxResult minimax(std::span<const double> payoff, std::size_t nu, std::size_t nv) {
    MinimaxResult r;
    for (std::size_t i = 0; i < nu; ++i) {
        std::size_t arg = 0;
        double inner = payoff[i * nv];
        for (std::size_t j = 1; j < nv; ++j)
            if (payoff[i * nv + j] < inner) {
                inner = payoff[i * nv + j];
                arg = j;
            }
        if (i == 0 || inner > r.lower) {
            r.lower = inner;
            r.lower_u = i;
            r.lower_v = arg;
        }
    }
    for (std::size_t j = 0; j < nv; ++j) {
        std::size_t arg = 0;
        double inner = payoff[j];
        for (std::size_t i = 1; i < nu; ++i)
            if (payoff[i * nv + j] > inner) {
                inner = payoff[i * nv + j];
                arg = i;
            }
        if (j == 0 || inner < r.upper) {
            r.upper = inner;
            r.upper_v = j;
            r.upper_u = arg;
        }
    }
    return r;
}

struct HamiltonianInput {
    double t = 0.0;
    State x;
    double y = 0.0;
    Vec z{};
    Mat gamma{};
};

// ½σ²:γ + σb·z + f(t, x, y, z·σ, u, v)
inline double payoff(const HamiltonianInput& in, const ControlValue& u, const ControlValue& v,
                     const Coefficients& cf, int dim) {
    const Mat s = cf.sigma(in.t, u, v);
    const Mat a = mat_mul(s, s);
    return 0.5 * frobenius(a, in.gamma, dim) + dot(cf.effective_drift(in.t, u, v), in.z, dim) +
           cf.f(in.t, in.x, in.y, vec_mat(in.z, s), u, v);
}

struct HamiltonianResult {
    double lower = 0.0;
    double upper = 0.0;
    double gap = 0.0;
    std::size_t lower_u = 0, lower_v = 0;  // maximizing u, and v minimizing against it
    std::size_t upper_v = 0, upper_u = 0;  // minimizing v, and u maximizing against it
};

inline HamiltonianResult lower_upper(const HamiltonianInput& in, const GameSpec& spec) {
    if (!is_symmetric(in.gamma, 1e-12)) throw ValidationError("Hessian argument gamma is not symmetric");
    const std::size_t nu = spec.U.size(), nv = spec.V.size();
    std::vector<double> table(nu * nv);
    for (std::size_t i = 0; i < nu; ++i)
        for (std::size_t j = 0; j < nv; ++j) table[i * nv + j] = payoff(in, spec.U[i], spec.V[j], spec.coeffs, spec.dim);
    const MinimaxResult m = minimax(table, nu, nv);
    return {m.lower, m.upper, m.gap(), m.lower_u, m.lower_v, m.upper_v, m.upper_u};
}

struct IsaacsReport {
    double max_gap = 0.0;
    HamiltonianInput witness;
    std::size_t samples = 0;
    double tolerance = 0.0;
    bool passed = true;
};

namespace detail {

// Sampled inputs are rounded to a dyadic lattice (2^-20) so that sums of a
// few of them are exact in double precision.
inline double dyadic(double x) { return std::ldexp(std::nearbyint(std::ldexp(x, 20)), -20); }

}  // namespace detail

// Samples t, x (|x| <= 3 C0 √T), y (|y| <= value bound), z (|z_i| <= 10) and
// symmetric γ with eigenvalues in [-10, 10]; reports the largest Hamiltonian gap.
inline IsaacsReport isaacs_check(const GameSpec& spec, std::size_t sample_count, double tolerance,
                                 std::uint64_t seed = 511ULL) {
    if (sample_count < 1) throw ValidationError("isaacs_check needs at least one sample");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sym = [&](double r) { return detail::dyadic((2.0 * unit(rng) - 1.0) * r); };
    const double xr = 3.0 * spec.coeffs.C0 * std::sqrt(spec.T);
    const double yr = spec.value_bound();

    IsaacsReport rep;
    rep.samples = sample_count;
    rep.tolerance = tolerance;
    bool first = true;
    for (std::size_t s = 0; s < sample_count; ++s) {
        HamiltonianInput in;
        in.t = detail::dyadic(unit(rng) * spec.T);
        for (int i = 0; i < spec.dim; ++i) in.x.x[i] = sym(xr);
        in.x.aug = sym(xr);
        in.y = sym(yr);
        for (int i = 0; i < spec.dim; ++i) in.z[i] = sym(10.0);
        if (spec.dim == 1) {
            in.gamma[0][0] = sym(10.0);
        } else {
            const double th = unit(rng) * 3.141592653589793;
            const double l1 = (2.0 * unit(rng) - 1.0) * 10.0, l2 = (2.0 * unit(rng) - 1.0) * 10.0;
            const double c = std::cos(th), sn = std::sin(th);
            in.gamma[0][0] = detail::dyadic(c * c * l1 + sn * sn * l2);
            in.gamma[1][1] = detail::dyadic(sn * sn * l1 + c * c * l2);
            in.gamma[0][1] = in.gamma[1][0] = detail::dyadic(c * sn * (l1 - l2));
        }
        const HamiltonianResult h = lower_upper(in, spec);
        if (first || h.gap > rep.max_gap) {
            rep.max_gap = h.gap;
            rep.witness = in;
            first = false;
        }
    }
    rep.passed = rep.max_gap <= tolerance;
    return rep;
}

}  // namespace sdg
