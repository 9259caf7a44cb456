#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/linalg.hpp"

namespace sdg {

// One lattice move: step in units of dx per axis. Moves are grouped so that
// expectations can be accumulated axis by axis (group 0, 1, then cross
// moves in group 2); with a diagonal diffusion this keeps the one-step
// operator exactly additive in the per-axis control dependence.
struct Move {
    std::array<int, kMaxDim> step{};
    double prob = 0.0;
    int group = 0;
};

struct Stencil {
    std::vector<Move> moves;  // non-stay moves with positive probability
    double stay = 1.0;
    Vec drift{};      // target mean rate
    Mat diffusion{};  // target covariance rate σ²
    Vec mean{};       // realized mean increment
    Mat cov{};        // realized covariance increment
    double mean_defect = 0.0;
    double cov_defect = 0.0;
    bool clamped = false;     // some axis fell back to the drift-direction stencil
    bool degenerate = false;  // no diffusion at all
    double move_mass() const { return 1.0 - stay; }
    bool feasible(double tol = 1e-12) const { return stay >= -tol; }
};

// Locally consistent trinomial-per-axis stencil with the positive/negative
// correlation splitting for the off-diagonal diffusion. Per axis the pair
// (p+, p-) matches the mean μ·dt exactly and the second moment
// a_ii·dt + μ²·dt² whenever that is representable; otherwise all axis mass
// moves in the drift direction (minimal variance surplus).
inline Stencil make_stencil(int dim, const Mat& a, const Vec& mu, const Vec& dx, double dt) {
    Stencil s;
    s.drift = mu;
    s.diffusion = a;
    const double c = dim == 2 ? 0.5 * (a[0][1] + a[1][0]) : 0.0;
    s.degenerate = max_abs(a, dim) == 0.0;

    double mass = 0.0;
    for (int i = 0; i < dim; ++i) {
        const int j = 1 - i;
        const double cross_share = dim == 2 ? std::abs(c) * dx[i] / dx[j] : 0.0;
        const double budget = a[i][i] - cross_share;
        if (budget < -1e-14 * std::max(1.0, a[i][i])) {
            std::ostringstream os;
            os << "negative-probability stencil: axis " << i << " diffusion " << a[i][i]
               << " cannot carry correlation " << c << " at dx ratio " << dx[i] / dx[j]
               << "; need dx" << i << "/dx" << j << " <= " << a[i][i] / std::abs(c);
            throw StencilError(os.str());
        }
        const double m = mu[i] * dt / dx[i];
        const double target = (std::max(budget, 0.0) * dt + mu[i] * mu[i] * dt * dt) / (dx[i] * dx[i]);
        double sum = target;
        if (target < std::abs(m)) {
            sum = std::abs(m);
            s.clamped = true;
        }
        const double up = 0.5 * (sum + m);
        const double down = 0.5 * (sum - m);
        Move plus{{0, 0}, up, i};
        plus.step[i] = 1;
        Move minus{{0, 0}, down, i};
        minus.step[i] = -1;
        if (up > 0.0) s.moves.push_back(plus);
        if (down > 0.0) s.moves.push_back(minus);
        mass += up + down;
    }
    if (dim == 2 && c != 0.0) {
        const double q = std::abs(c) * dt / (2.0 * dx[0] * dx[1]);
        const int sgn = c > 0.0 ? 1 : -1;
        s.moves.push_back({{1, sgn}, q, 2});
        s.moves.push_back({{-1, -sgn}, q, 2});
        mass += 2.0 * q;
    }
    s.stay = 1.0 - mass;

    Vec second_x{};
    Mat second{};
    for (const Move& mv : s.moves) {
        for (int i = 0; i < dim; ++i) {
            const double di = mv.step[i] * dx[i];
            second_x[i] += mv.prob * di;
            for (int k = 0; k < dim; ++k) second[i][k] += mv.prob * di * mv.step[k] * dx[k];
        }
    }
    s.mean = second_x;
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) s.cov[i][k] = second[i][k] - s.mean[i] * s.mean[k];
    for (int i = 0; i < dim; ++i) {
        s.mean_defect = std::max(s.mean_defect, std::abs(s.mean[i] - mu[i] * dt));
        for (int k = 0; k < dim; ++k)
            s.cov_defect = std::max(s.cov_defect, std::abs(s.cov[i][k] - a[i][k] * dt));
    }
    return s;
}

}  // namespace sdg

namespace sdg {

// Total off-center weight of the explicit monotone finite-difference step
// (central first differences where the axis diffusion dominates the drift,
// upwind otherwise). The center weight is 1 minus this value.
inline double fd_load(int dim, const Mat& a, const Vec& mu, const Vec& dx, double dt) {
    const double c = dim == 2 ? 0.5 * (a[0][1] + a[1][0]) : 0.0;
    double load = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double cross_share = dim == 2 ? std::abs(c) * dx[i] / dx[1 - i] : 0.0;
        const double budget = a[i][i] - cross_share;
        if (budget < -1e-14 * std::max(1.0, a[i][i]))
            throw StencilError("finite-difference cross derivative not monotone: diagonal diffusion too small");
        load += std::max(budget, 0.0) * dt / (dx[i] * dx[i]);
        if (std::max(budget, 0.0) < std::abs(mu[i]) * dx[i]) load += std::abs(mu[i]) * dt / dx[i];
    }
    if (dim == 2) load += std::abs(c) * dt / (dx[0] * dx[1]);
    return load;
}

}  // namespace sdg
