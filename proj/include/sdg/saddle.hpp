#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sdg/chain.hpp"
#include "sdg/dpp.hpp"
#include "sdg/errors.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/model.hpp"
#include "sdg/parallel.hpp"
#include "sdg/policy.hpp"

namespace sdg {

struct SaddleExtraction {
    Policy u_star;  // argmax of the lower recursion
    Policy v_star;  // argmin of the upper recursion
    double lower_at_origin = 0.0;
    double upper_at_origin = 0.0;
    double max_gap = 0.0;           // max over initial-slice nodes of |upper - lower|
    double scheme_tolerance = 0.0;  // accumulated one-step consistency defect
    double epsilon_scheme = 0.0;    // max_gap + scheme_tolerance
};

namespace detail {

// Σ_k [½·(max covariance defect)·max|D²_h V_{k+1}| + (max mean defect)·max|D_h V_{k+1}|]:
// the local truncation error of the lattice step measured on the solved field.
// Derivatives are taken on reach_nodes, away from the frozen boundary layer.
inline double scheme_tolerance(const TransitionKernel& kernel, const ValueField& field) {
    const Grid& g = kernel.grid();
    double total = 0.0;
    const std::vector<std::size_t> inside = reach_nodes(g);
    for (long k = 0; k < g.n_t; ++k) {
        const std::span<const double> v = field.slice(k + 1);
        double d1 = 0.0, d2 = 0.0;
        for (const std::size_t n : inside) {
            for (int i = 0; i < g.dim; ++i) {
                const std::size_t s = g.stride(i);
                const double h = g.axes[i].dx;
                d1 = std::max(d1, std::abs(v[n + s] - v[n - s]) / (2.0 * h));
                d2 = std::max(d2, std::abs(v[n + s] - 2.0 * v[n] + v[n - s]) / (h * h));
            }
            if (g.dim == 2) {
                const std::size_t s0 = g.stride(0), s1 = g.stride(1);
                const double c = (v[n + s0 + s1] - v[n + s0 - s1] - v[n - s0 + s1] + v[n - s0 - s1]) /
                                 (4.0 * g.axes[0].dx * g.axes[1].dx);
                d2 = std::max(d2, std::abs(c));
            }
        }
        total += 0.5 * kernel.max_cov_defect() * d2 + kernel.max_mean_defect() * d1;
    }
    return total;
}

}  // namespace detail

inline SaddleExtraction extract(const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel,
                                const GameSolution& lower, const GameSolution& upper, std::size_t isaacs_samples = 2000) {
    const IsaacsReport isaacs = isaacs_check(spec, isaacs_samples, 1e-10);
    if (!isaacs.passed) {
        std::ostringstream os;
        os << "saddle extraction refused: Isaacs condition fails (gap " << isaacs.max_gap << ")";
        throw RefusalError(os.str());
    }
    if (lower.field.problem != Problem::lower || upper.field.problem != Problem::upper)
        throw ValidationError("extraction needs a lower-side and an upper-side solution");
    if (lower.field.nodes != grid.node_count() || upper.field.nodes != grid.node_count() ||
        lower.field.n_t != grid.n_t || upper.field.n_t != grid.n_t)
        throw ValidationError("lower and upper solutions must live on the extraction grid");
    SaddleExtraction e;
    e.u_star = lower.u_policy;
    e.v_star = upper.v_policy;
    const std::size_t o = grid.origin();
    e.lower_at_origin = lower.field.value(0, o);
    e.upper_at_origin = upper.field.value(0, o);
    for (std::size_t n = 0; n < grid.node_count(); ++n)
        e.max_gap = std::max(e.max_gap, std::abs(upper.field.value(0, n) - lower.field.value(0, n)));
    e.scheme_tolerance = detail::scheme_tolerance(kernel, lower.field);
    e.epsilon_scheme = e.max_gap + e.scheme_tolerance;
    return e;
}

struct DeviationTrial {
    std::string id;
    std::string side;        // "maximizer" deviates from u*, "minimizer" from v*
    double payoff = 0.0;     // deviating payoff at the origin
    double violation = 0.0;  // largest gain of the deviating player over the initial slice
    bool within_epsilon = true;
};

struct SaddleCertificate {
    double epsilon = 0.0;
    double value_at_origin = 0.0;  // Y(u*, v*)
    std::vector<DeviationTrial> trials;
    double worst_violation = 0.0;
    bool passed = true;
};

namespace detail {

// One-step best response of one player against the other's fixed policy,
// measured on a given value field (greedy), or on the recursion it builds
// itself (exact lattice best response when `field` is null).
inline Policy best_response(const GameSpec& spec, const TransitionKernel& kernel, const Policy& fixed, bool maximizer,
                            const ValueField* field, const Parallelism& par) {
    const Grid& g = kernel.grid();
    const ControlSet& own = maximizer ? spec.U : spec.V;
    Policy p(own.id(), g.n_t, g.node_count());
    std::vector<double> cur(g.node_count()), prev(g.node_count());
    terminal_slice(spec, g, cur);
    for (long k = g.n_t - 1; k >= 0; --k) {
        const std::span<const double> next = field ? field->slice(k + 1) : std::span<const double>(cur);
        parallel_for(g.node_count(), par, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                if (kernel.absorbing(n)) {
                    prev[n] = next[n];
                    continue;
                }
                double best = 0.0;
                std::size_t arg = 0;
                for (std::size_t c = 0; c < own.size(); ++c) {
                    const std::size_t iu = maximizer ? c : fixed.at(k, n);
                    const std::size_t iv = maximizer ? fixed.at(k, n) : c;
                    const double y = one_step(next, n, k, iu, iv, kernel, spec, false).y;
                    if (c == 0 || (maximizer ? y > best : y < best)) {
                        best = y;
                        arg = c;
                    }
                }
                prev[n] = best;
                p.at(k, n) = static_cast<std::uint16_t>(arg);
            }
        });
        std::swap(cur, prev);
    }
    return p;
}

}  // namespace detail

// Checks Y(u, v*) - ε ≤ Y(u*, v*) ≤ Y(u*, v) + ε over random node-wise
// deviations, greedy one-step best responses against the solved fields and
// the exact lattice best responses.
inline SaddleCertificate verify(const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel,
                                const SaddleExtraction& ex, std::size_t deviations, std::uint64_t seed,
                                const ValueField* lower_field = nullptr, const ValueField* upper_field = nullptr,
                                const Parallelism& par = {}) {
    SaddleCertificate cert;
    cert.epsilon = ex.epsilon_scheme;
    const ValueField center = evaluate_policies(spec, grid, kernel, ex.u_star, ex.v_star, par);
    const std::size_t o = grid.origin();
    cert.value_at_origin = center.value(0, o);

    auto record = [&](const std::string& id, bool maximizer, const Policy& u, const Policy& v) {
        const ValueField dev = evaluate_policies(spec, grid, kernel, u, v, par);
        DeviationTrial t;
        t.id = id;
        t.side = maximizer ? "maximizer" : "minimizer";
        t.payoff = dev.value(0, o);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < grid.node_count(); ++n) {
            const double gain = maximizer ? dev.value(0, n) - center.value(0, n) : center.value(0, n) - dev.value(0, n);
            worst = std::max(worst, gain);
        }
        t.violation = worst;
        t.within_epsilon = worst <= cert.epsilon;
        cert.worst_violation = cert.trials.empty() ? worst : std::max(cert.worst_violation, worst);
        cert.passed = cert.passed && t.within_epsilon;
        cert.trials.push_back(std::move(t));
    };

    record("center", true, ex.u_star, ex.v_star);
    for (std::size_t i = 0; i < deviations; ++i) {
        const std::uint64_t s = seed + 2 * i;
        record("random_u_" + std::to_string(i), true, random_policy(spec.U, grid, s), ex.v_star);
        record("random_v_" + std::to_string(i), false, ex.u_star, random_policy(spec.V, grid, s + 1));
    }
    if (upper_field)
        record("greedy_u", true, detail::best_response(spec, kernel, ex.v_star, true, upper_field, par), ex.v_star);
    if (lower_field)
        record("greedy_v", false, ex.u_star, detail::best_response(spec, kernel, ex.u_star, false, lower_field, par));
    record("best_response_u", true, detail::best_response(spec, kernel, ex.v_star, true, nullptr, par), ex.v_star);
    record("best_response_v", false, ex.u_star, detail::best_response(spec, kernel, ex.u_star, false, nullptr, par));
    return cert;
}

}  // namespace sdg
