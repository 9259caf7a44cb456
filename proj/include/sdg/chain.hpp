#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/model.hpp"
#include "sdg/policy.hpp"
#include "sdg/stencil.hpp"

namespace sdg {

// E[V(X')] and E[(V(X') - V(x))(ΔX - E ΔX)] under one stencil.
struct Moments {
    double mean = 0.0;
    Vec cross{};
};

// Locally consistent Markov chain on the lattice, one stencil per
// (time step, u, v). Coefficients do not depend on the state, so interior
// nodes share a stencil; spatial boundary nodes are absorbing.
class TransitionKernel {
public:
    TransitionKernel(const GameSpec& spec, const Grid& grid) : grid_(grid), nu_(spec.U.size()), nv_(spec.V.size()) {
        if (grid.scheme != Scheme::markov_chain)
            throw ValidationError("transition kernel needs a grid built for the Markov-chain scheme");
        homogeneous_ = spec.coeffs.time_homogeneous;
        const long slices = homogeneous_ ? 1 : grid.n_t;
        const Vec dx = grid.dx();
        stencils_.reserve(static_cast<std::size_t>(slices) * nu_ * nv_);
        for (long k = 0; k < slices; ++k) {
            const double t = grid.time(k);
            for (std::size_t i = 0; i < nu_; ++i)
                for (std::size_t j = 0; j < nv_; ++j) {
                    const Mat a = spec.coeffs.sigma_sq(t, spec.U[i], spec.V[j]);
                    const Vec mu = spec.coeffs.effective_drift(t, spec.U[i], spec.V[j]);
                    Stencil s;
                    try {
                        s = make_stencil(grid.dim, a, mu, dx, grid.dt);
                    } catch (const StencilError& e) {
                        std::ostringstream os;
                        os << e.what() << " (time step " << k << ", u=" << spec.U.label(i)
                           << ", v=" << spec.V.label(j) << ")";
                        throw StencilError(os.str());
                    }
                    if (!s.feasible()) {
                        std::ostringstream os;
                        os << "stencil move probability " << s.move_mass() << " exceeds 1 at time step " << k
                           << ", u=" << spec.U.label(i) << ", v=" << spec.V.label(j);
                        throw CflError(os.str(), minimal_time_steps(spec, dx, Scheme::markov_chain));
                    }
                    max_mean_defect_ = std::max(max_mean_defect_, s.mean_defect);
                    max_cov_defect_ = std::max(max_cov_defect_, s.cov_defect);
                    clamped_ += s.clamped ? 1 : 0;
                    degenerate_ += s.degenerate ? 1 : 0;
                    std::vector<std::ptrdiff_t> off;
                    for (const Move& mv : s.moves)
                        off.push_back(mv.step[0] * static_cast<std::ptrdiff_t>(grid.stride(0)) +
                                      mv.step[1] * static_cast<std::ptrdiff_t>(grid.stride(1)));
                    offsets_.push_back(std::move(off));
                    sigmas_.push_back(spec.coeffs.sigma(t, spec.U[i], spec.V[j]));
                    stencils_.push_back(std::move(s));
                }
        }
        absorbing_.resize(grid.node_count());
        for (std::size_t n = 0; n < absorbing_.size(); ++n) absorbing_[n] = grid.boundary(n) ? 1 : 0;
    }

    const Grid& grid() const { return grid_; }
    std::size_t u_count() const { return nu_; }
    std::size_t v_count() const { return nv_; }
    bool absorbing(std::size_t node) const { return absorbing_[node] != 0; }

    const Stencil& stencil(long k, std::size_t iu, std::size_t iv) const { return stencils_[slot(k, iu, iv)]; }
    const Mat& sigma(long k, std::size_t iu, std::size_t iv) const { return sigmas_[slot(k, iu, iv)]; }

    double max_mean_defect() const { return max_mean_defect_; }
    double max_cov_defect() const { return max_cov_defect_; }
    std::size_t clamped_count() const { return clamped_; }
    std::size_t degenerate_count() const { return degenerate_; }

    // Moments of the next-slice values seen from `node` at step k under (iu, iv).
    Moments moments(std::span<const double> next, std::size_t node, long k, std::size_t iu, std::size_t iv,
                    bool want_cross) const {
        Moments m;
        if (absorbing(node)) {
            m.mean = next[node];
            return m;
        }
        const std::size_t sl = slot(k, iu, iv);
        const Stencil& s = stencils_[sl];
        if (grid_.aug_kind == AugKind::none) {
            const auto& off = offsets_[sl];
            const double v0 = next[node];
            double acc = v0;
            double group_sum = 0.0;
            int group = 0;
            for (std::size_t q = 0; q < s.moves.size(); ++q) {
                const Move& mv = s.moves[q];
                if (mv.group != group) {
                    acc += group_sum;
                    group_sum = 0.0;
                    group = mv.group;
                }
                const double dv = next[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + off[q])] - v0;
                group_sum += mv.prob * dv;
                if (want_cross)
                    for (int i = 0; i < grid_.dim; ++i)
                        m.cross[i] += mv.prob * dv * (mv.step[i] * grid_.axes[i].dx - s.mean[i]);
            }
            m.mean = acc + group_sum;
            return m;
        }
        // Augmented lattice: every move (including "stay") also updates the
        // path statistic, so accumulate landing values explicitly.
        const auto idx = grid_.decode(node);
        const double base = landing_value(next, idx, {0, 0}, k);
        double acc = s.stay * base;
        for (const Move& mv : s.moves) {
            const double val = landing_value(next, idx, mv.step, k);
            acc += mv.prob * val;
            if (want_cross)
                for (int i = 0; i < grid_.dim; ++i)
                    m.cross[i] += mv.prob * (val - base) * (mv.step[i] * grid_.axes[i].dx - s.mean[i]);
        }
        m.mean = acc;
        return m;
    }

    // One transition from `node` at step k under (iu, iv).
    template <class Rng>
    std::size_t step(std::size_t node, long k, std::size_t iu, std::size_t iv, Rng& rng) const {
        if (absorbing(node)) return node;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const Stencil& s = stencil(k, iu, iv);
        const double r = unit(rng);
        std::array<int, kMaxDim> step{0, 0};
        double cum = 0.0;
        for (const Move& mv : s.moves) {
            cum += mv.prob;
            if (r < cum) {
                step = mv.step;
                break;
            }
        }
        const auto idx = grid_.decode(node);
        const int i0 = idx[0] + step[0];
        const int i1 = idx[1] + step[1];
        int ia = idx[2];
        if (grid_.aug_kind == AugKind::running_max) {
            ia = std::max(ia, i0);
        } else if (grid_.aug_kind == AugKind::running_average) {
            const auto [j, w] = average_position(idx[2], grid_.axes[0].coord(i0), k);
            ia = unit(rng) < w ? j + 1 : j;
        }
        return grid_.encode(i0, i1, ia);
    }

    // Simulates the controlled chain from `start` for n_t steps. Returns the
    // n_t + 1 visited nodes (start included).
    std::vector<std::size_t> sample_path(const Policy& u_policy, const Policy& v_policy, std::uint64_t seed,
                                         std::size_t start) const {
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> path;
        path.reserve(static_cast<std::size_t>(grid_.n_t) + 1);
        std::size_t node = start;
        path.push_back(node);
        for (long k = 0; k < grid_.n_t; ++k) {
            if (!absorbing(node)) node = step(node, k, u_policy.at(k, node), v_policy.at(k, node), rng);
            path.push_back(node);
        }
        return path;
    }

private:
    std::size_t slot(long k, std::size_t iu, std::size_t iv) const {
        const std::size_t sk = homogeneous_ ? 0 : static_cast<std::size_t>(k);
        return (sk * nu_ + iu) * nv_ + iv;
    }

    // Running average after the (k+1)-th step: A' = A + (x' - A)/(k+2).
    std::pair<int, double> average_position(int ia, double x_new, long k) const {
        const Axis& ax = grid_.aug_axis;
        const double a = ax.coord(ia);
        const double a_new = a + (x_new - a) / static_cast<double>(k + 2);
        const double p = std::clamp((a_new - ax.lo) / ax.dx, 0.0, static_cast<double>(ax.n - 1));
        const int j = std::min(static_cast<int>(std::floor(p)), ax.n - 2);
        return {j, p - j};
    }

    double landing_value(std::span<const double> next, const std::array<int, 3>& idx, const std::array<int, kMaxDim>& step,
                         long k) const {
        const int i0 = idx[0] + step[0];
        const int i1 = idx[1] + step[1];
        if (grid_.aug_kind == AugKind::running_max) return next[grid_.encode(i0, i1, std::max(idx[2], i0))];
        const auto [j, w] = average_position(idx[2], grid_.axes[0].coord(i0), k);
        const double lo = next[grid_.encode(i0, i1, j)];
        const double hi = next[grid_.encode(i0, i1, j + 1)];
        return w == 0.0 ? lo : (1.0 - w) * lo + w * hi;
    }

    Grid grid_;
    std::size_t nu_;
    std::size_t nv_;
    bool homogeneous_ = true;
    std::vector<Stencil> stencils_;
    std::vector<std::vector<std::ptrdiff_t>> offsets_;
    std::vector<Mat> sigmas_;
    std::vector<std::uint8_t> absorbing_;
    double max_mean_defect_ = 0.0;
    double max_cov_defect_ = 0.0;
    std::size_t clamped_ = 0;
    std::size_t degenerate_ = 0;
};

}  // namespace sdg
