#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/linalg.hpp"
#include "sdg/stencil.hpp"

namespace sdg {

using ControlValue = std::array<double, 2>;

// A finite set of admissible control values.
class ControlSet {
public:
    ControlSet() = default;
    ControlSet(std::string id, std::vector<ControlValue> points, int dim = 1,
               std::vector<std::string> labels = {})
        : id_(std::move(id)), points_(std::move(points)), labels_(std::move(labels)), dim_(dim) {
        if (labels_.empty()) {
            for (const auto& p : points_) {
                std::ostringstream os;
                os << p[0];
                if (dim_ == 2) os << ',' << p[1];
                labels_.push_back(os.str());
            }
        }
    }

    // n equally spaced scalar values on [lo, hi]; n == 1 gives the midpoint.
    static ControlSet grid(std::string id, double lo, double hi, int n) {
        if (n < 1) throw ValidationError("control grid " + id + " needs at least one point");
        std::vector<ControlValue> pts;
        for (int i = 0; i < n; ++i) {
            const double x = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
            pts.push_back({x, 0.0});
        }
        return ControlSet(std::move(id), std::move(pts));
    }

    static ControlSet singleton(std::string id, double value = 0.0) {
        return ControlSet(std::move(id), {{value, 0.0}});
    }

    const std::string& id() const { return id_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    int dim() const { return dim_; }
    const ControlValue& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<ControlValue>& points() const { return points_; }
    const std::string& label(std::size_t i) const { return labels_[i]; }

    void validate() const {
        if (points_.empty()) throw ValidationError("control set " + id_ + " is empty");
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (std::size_t j = i + 1; j < points_.size(); ++j)
                if (points_[i] == points_[j])
                    throw ValidationError("control set " + id_ + " has duplicate point " + labels_[i]);
    }

private:
    std::string id_;
    std::vector<ControlValue> points_;
    std::vector<std::string> labels_;
    int dim_ = 1;
};

// Spatial state plus the optional augmented path statistic.
struct State {
    Vec x{};
    double aug = 0.0;
};

enum class DriftForm {
    scaled,  // state drift is σ·b
    direct,  // b already is the state drift (X of the form ∫σ dB + ∫b dt)
};

// Modulus of continuity descriptor: rho(r) = constant * r^exponent.
struct Modulus {
    enum class Kind { lipschitz, holder };
    Kind kind = Kind::lipschitz;
    double constant = 1.0;
    double exponent = 1.0;

    double operator()(double r) const {
        return kind == Kind::lipschitz ? constant * r : constant * std::pow(r, exponent);
    }
};

using SigmaFn = std::function<Mat(double t, const ControlValue& u, const ControlValue& v)>;
using DriftFn = std::function<Vec(double t, const ControlValue& u, const ControlValue& v)>;
using DriverFn = std::function<double(double t, const State& x, double y, const Vec& zhat,
                                      const ControlValue& u, const ControlValue& v)>;
using TerminalFn = std::function<double(const State& x)>;

struct Coefficients {
    SigmaFn sigma;
    DriftFn b;
    DriftForm drift_form = DriftForm::scaled;
    DriverFn f;
    TerminalFn xi;
    double C0 = 1.0;
    double L0 = 0.0;
    Modulus rho0;
    bool driver_uses_z = false;
    bool time_homogeneous = true;

    Vec effective_drift(double t, const ControlValue& u, const ControlValue& v) const {
        const Vec bb = b(t, u, v);
        return drift_form == DriftForm::direct ? bb : mat_vec(sigma(t, u, v), bb);
    }

    // σ² = σσ (σ is symmetric).
    Mat sigma_sq(double t, const ControlValue& u, const ControlValue& v) const {
        const Mat s = sigma(t, u, v);
        return mat_mul(s, s);
    }
};

enum class AugKind { none, running_max, running_average };

inline const char* to_string(AugKind k) {
    switch (k) {
        case AugKind::running_max: return "running_max";
        case AugKind::running_average: return "running_average";
        default: return "none";
    }
}

struct Augmentation {
    AugKind kind = AugKind::none;
    int points = 0;  // running_average lattice size; running_max reuses axis 0
};

struct GameSpec {
    std::string family;
    int dim = 1;
    double T = 1.0;
    ControlSet U;
    ControlSet V;
    Coefficients coeffs;
    Augmentation aug;

    // Discrete analogue of the a-priori value bound: e^{L0 T}(C0 + C0 T).
    double value_bound() const { return std::exp(coeffs.L0 * T) * (coeffs.C0 + coeffs.C0 * T); }
};

// Sampled sup of max-entry |σ| and |σb| over times and all control pairs.
inline double coefficient_bound(const GameSpec& spec, int time_samples = 33) {
    double c = 0.0;
    const int nt = spec.coeffs.time_homogeneous ? 1 : time_samples;
    for (int k = 0; k < nt; ++k) {
        const double t = nt == 1 ? 0.0 : spec.T * k / (nt - 1);
        for (std::size_t i = 0; i < spec.U.size(); ++i)
            for (std::size_t j = 0; j < spec.V.size(); ++j) {
                c = std::max(c, max_abs(spec.coeffs.sigma(t, spec.U[i], spec.V[j]), spec.dim));
                c = std::max(c, max_abs(spec.coeffs.effective_drift(t, spec.U[i], spec.V[j]), spec.dim));
            }
    }
    return c;
}

// Default truncation half-width: 3·C·√T reach plus a 0.5·C·√T margin.
inline double default_half_width(const GameSpec& spec) {
    return 3.5 * coefficient_bound(spec) * std::sqrt(spec.T);
}

// ---------------------------------------------------------------------------
// Validation of the standing assumptions by Monte Carlo sampling.

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    double worst = 0.0;  // largest sampled value of the checked quantity
    double bound = 0.0;
    std::string witness;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    std::size_t samples = 0;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    const AssumptionCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline std::string describe(double t, const ControlValue& u, const ControlValue& v, int udim, int vdim) {
    std::ostringstream os;
    os << "t=" << t << " u=" << u[0];
    if (udim == 2) os << ',' << u[1];
    os << " v=" << v[0];
    if (vdim == 2) os << ',' << v[1];
    return os.str();
}

inline void record(AssumptionCheck& c, double value, const std::string& witness) {
    if (c.witness.empty() || value > c.worst) {
        c.worst = value;
        c.witness = witness;
    }
}

}  // namespace detail

inline ValidationReport validate_spec(const GameSpec& spec, std::size_t n_samples,
                                      std::uint64_t seed = 20130412ULL) {
    if (n_samples < 1) throw ValidationError("validate_spec needs at least one sample");
    if (spec.dim < 1 || spec.dim > kMaxDim) throw ValidationError("dimension must be 1 or 2");
    if (!(spec.T > 0.0)) throw ValidationError("horizon T must be positive");
    spec.U.validate();
    spec.V.validate();
    const Coefficients& cf = spec.coeffs;
    if (!cf.sigma || !cf.b || !cf.f || !cf.xi) throw ValidationError("coefficients not fully populated");

    const int d = spec.dim;
    const double h = std::max(default_half_width(spec), 1e-12);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](std::size_t n) { return std::min<std::size_t>(n - 1, static_cast<std::size_t>(unit(rng) * n)); };
    auto sym = [&](double r) { return (2.0 * unit(rng) - 1.0) * r; };

    AssumptionCheck sig{"A3.1 sigma bound", true, 0.0, cf.C0, ""};
    AssumptionCheck drift{"A3.1 b bound", true, 0.0, cf.C0, ""};
    AssumptionCheck f0{"A3.3(i) driver bound", true, 0.0, cf.C0, ""};
    AssumptionCheck lip{"A3.3(ii) driver Lipschitz", true, 0.0, cf.L0, ""};
    AssumptionCheck term{"A3.5 terminal bound", true, 0.0, cf.C0, ""};

    for (std::size_t s = 0; s < n_samples; ++s) {
        const double t = unit(rng) * spec.T;
        const ControlValue& u = spec.U[pick(spec.U.size())];
        const ControlValue& v = spec.V[pick(spec.V.size())];
        const std::string at = detail::describe(t, u, v, spec.U.dim(), spec.V.dim());

        const Mat sm = cf.sigma(t, u, v);
        const auto ev = sym_eigenvalues(sm, d);
        if (!is_symmetric(sm, 1e-12) || ev[0] < -1e-12) {
            std::ostringstream os;
            os << "sigma is not symmetric PSD at " << at << " (smallest eigenvalue " << ev[0] << ")";
            throw ValidationError(os.str());
        }
        detail::record(sig, max_abs(sm, d), at);
        // The bound applies to the drift coefficient as supplied by the family.
        detail::record(drift, max_abs(cf.b(t, u, v), d), at);

        State x;
        for (int i = 0; i < d; ++i) x.x[i] = sym(h);
        x.aug = sym(h);
        std::ostringstream xs;
        xs << at << " x=(" << x.x[0];
        if (d == 2) xs << ',' << x.x[1];
        xs << ") aug=" << x.aug;

        detail::record(f0, std::abs(cf.f(t, x, 0.0, Vec{}, u, v)), xs.str());

        const double y1 = sym(10.0), y2 = sym(10.0);
        Vec z1{}, z2{};
        for (int i = 0; i < d; ++i) {
            z1[i] = sym(10.0);
            z2[i] = sym(10.0);
        }
        Vec dz{z1[0] - z2[0], z1[1] - z2[1]};
        const double denom = std::abs(y1 - y2) + norm2(dz, d);
        if (denom > 1e-9) {
            const double ratio = std::abs(cf.f(t, x, y1, z1, u, v) - cf.f(t, x, y2, z2, u, v)) / denom;
            detail::record(lip, ratio, xs.str());
        }
        detail::record(term, std::abs(cf.xi(x)), xs.str());
    }
    const double slack = 1e-12;
    for (AssumptionCheck* c : {&sig, &drift, &f0, &lip, &term}) c->passed = c->worst <= c->bound + slack;

    ValidationReport r;
    r.samples = n_samples;
    r.checks = {sig, drift, f0, lip, term};
    return r;
}

// ---------------------------------------------------------------------------
// Space-time lattice.

struct Axis {
    double lo = 0.0;
    double dx = 1.0;
    int n = 1;
    double coord(int i) const { return lo + dx * i; }
    double hi() const { return coord(n - 1); }
};

enum class Scheme { markov_chain, finite_difference };

struct GridRequest {
    long n_t = 0;                     // 0 selects the minimal admissible count
    std::array<int, kMaxDim> points{101, 101};
    double half_width = 0.0;          // 0 selects the coefficient-based default
    int aug_points = 0;               // running_average axis size (0: same as axis 0)
    Scheme scheme = Scheme::markov_chain;
    bool allow_degenerate = false;    // permit σ ≡ 0 (pure-drift stencils)
};

class Grid {
public:
    int dim = 1;
    long n_t = 1;
    double T = 1.0;
    double dt = 1.0;
    std::array<Axis, kMaxDim> axes{};
    AugKind aug_kind = AugKind::none;
    Axis aug_axis{};  // n == 1 when there is no augmentation
    Scheme scheme = Scheme::markov_chain;

    std::size_t spatial_count() const {
        std::size_t n = 1;
        for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(axes[i].n);
        return n;
    }
    std::size_t node_count() const { return spatial_count() * static_cast<std::size_t>(aug_axis.n); }
    std::size_t stride(int axis) const { return axis == 0 ? 1 : static_cast<std::size_t>(axes[0].n); }
    std::size_t aug_stride() const { return spatial_count(); }

    std::array<int, 3> decode(std::size_t node) const {
        std::array<int, 3> idx{0, 0, 0};
        idx[0] = static_cast<int>(node % axes[0].n);
        std::size_t rest = node / axes[0].n;
        if (dim == 2) {
            idx[1] = static_cast<int>(rest % axes[1].n);
            rest /= axes[1].n;
        }
        idx[2] = static_cast<int>(rest);
        return idx;
    }

    std::size_t encode(int i0, int i1, int ia) const {
        return static_cast<std::size_t>(i0) + stride(1) * static_cast<std::size_t>(dim == 2 ? i1 : 0) +
               aug_stride() * static_cast<std::size_t>(ia);
    }

    State state(std::size_t node) const {
        const auto idx = decode(node);
        State s;
        for (int i = 0; i < dim; ++i) s.x[i] = axes[i].coord(idx[i]);
        s.aug = aug_kind == AugKind::none ? 0.0 : aug_axis.coord(idx[2]);
        return s;
    }

    bool boundary(std::size_t node) const {
        const auto idx = decode(node);
        for (int i = 0; i < dim; ++i)
            if (idx[i] == 0 || idx[i] == axes[i].n - 1) return true;
        return false;
    }

    // Node of the initial point (lattice centre; augmented statistic equal to x0[0]).
    std::size_t origin() const {
        const int c0 = axes[0].n / 2;
        const int c1 = dim == 2 ? axes[1].n / 2 : 0;
        const int ca = aug_kind == AugKind::none ? 0 : aug_axis.n / 2;
        return encode(c0, c1, ca);
    }

    double time(long k) const { return dt * static_cast<double>(k); }
    Vec dx() const { return {axes[0].dx, dim == 2 ? axes[1].dx : 1.0}; }
};

namespace detail {

inline bool step_admissible(const GameSpec& spec, const Vec& dx, long n_t, Scheme scheme) {
    const double dt = spec.T / static_cast<double>(n_t);
    if (!(dt * spec.coeffs.L0 < 1.0)) return false;
    const long samples = spec.coeffs.time_homogeneous ? 1 : std::min<long>(n_t, 257);
    for (long s = 0; s < samples; ++s) {
        const long k = samples == 1 ? 0 : s * (n_t - 1) / (samples - 1);
        const double t = dt * static_cast<double>(k);
        for (std::size_t i = 0; i < spec.U.size(); ++i)
            for (std::size_t j = 0; j < spec.V.size(); ++j) {
                const Mat a = spec.coeffs.sigma_sq(t, spec.U[i], spec.V[j]);
                const Vec mu = spec.coeffs.effective_drift(t, spec.U[i], spec.V[j]);
                double load;
                try {
                    if (scheme == Scheme::markov_chain) {
                        load = make_stencil(spec.dim, a, mu, dx, dt).move_mass();
                    } else {
                        load = fd_load(spec.dim, a, mu, dx, dt) + dt * spec.coeffs.L0;
                    }
                } catch (const StencilError& e) {
                    std::ostringstream os;
                    os << e.what() << " (interior nodes, t=" << t << ", u=" << spec.U.label(i)
                       << ", v=" << spec.V.label(j) << ")";
                    throw StencilError(os.str());
                }
                if (load > 1.0 + 1e-12) return false;
            }
    }
    return true;
}

}  // namespace detail

// Smallest number of time steps for which the explicit step is monotone.
inline long minimal_time_steps(const GameSpec& spec, const Vec& dx, Scheme scheme) {
    if (detail::step_admissible(spec, dx, 1, scheme)) return 1;
    long lo = 1, hi = 2;
    while (!detail::step_admissible(spec, dx, hi, scheme)) {
        lo = hi;
        hi *= 2;
        if (hi > (1L << 30)) throw CflError("no admissible time step found", -1);
    }
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (detail::step_admissible(spec, dx, mid, scheme))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Interior nodes whose spatial coordinates lie in the reach box: 6/7 of the
// half-width, i.e. the domain without its 0.5·C·√T truncation margin.
inline std::vector<std::size_t> reach_nodes(const Grid& g) {
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (g.boundary(n)) continue;
        const State st = g.state(n);
        bool in = true;
        for (int i = 0; i < g.dim; ++i) in = in && std::abs(st.x[i]) <= g.axes[i].hi() * 6.0 / 7.0 + 1e-12;
        if (in) out.push_back(n);
    }
    return out;
}

inline Grid build_grid(const GameSpec& spec, const GridRequest& req) {
    if (spec.dim < 1 || spec.dim > kMaxDim) throw ValidationError("dimension must be 1 or 2");
    if (req.n_t < 0) throw ValidationError("n_t must be non-negative");
    for (int i = 0; i < spec.dim; ++i) {
        if (req.points[i] < 3) throw ValidationError("grid resolution must be at least 3 per axis");
        if (req.points[i] % 2 == 0) throw ValidationError("grid resolution must be odd so the origin is a node");
    }

    double max_eig = 0.0;
    for (std::size_t i = 0; i < spec.U.size(); ++i)
        for (std::size_t j = 0; j < spec.V.size(); ++j) {
            const int nt = spec.coeffs.time_homogeneous ? 1 : 33;
            for (int k = 0; k < nt; ++k) {
                const double t = nt == 1 ? 0.0 : spec.T * k / (nt - 1);
                max_eig = std::max(max_eig, sym_eigenvalues(spec.coeffs.sigma_sq(t, spec.U[i], spec.V[j]), spec.dim)[1]);
            }
        }
    if (max_eig == 0.0 && !req.allow_degenerate)
        throw ValidationError(
            "degenerate sigma: lattice/FD monotonicity requires a positive diffusion bound "
            "or the pure-drift kernel mode (allow_degenerate)");

    Grid g;
    g.dim = spec.dim;
    g.T = spec.T;
    g.scheme = req.scheme;
    const double h = req.half_width > 0.0 ? req.half_width : default_half_width(spec);
    if (!(h > 0.0)) throw ValidationError("domain half-width is zero; set grid.half_width");
    for (int i = 0; i < spec.dim; ++i) {
        g.axes[i].n = req.points[i];
        g.axes[i].dx = 2.0 * h / (req.points[i] - 1);
        g.axes[i].lo = -h;
    }
    if (spec.dim == 1) g.axes[1] = Axis{0.0, 1.0, 1};

    g.aug_kind = spec.aug.kind;
    if (spec.aug.kind == AugKind::running_max) {
        g.aug_axis = g.axes[0];
    } else if (spec.aug.kind == AugKind::running_average) {
        const int n = req.aug_points > 0 ? req.aug_points : (spec.aug.points > 0 ? spec.aug.points : g.axes[0].n);
        if (n < 3 || n % 2 == 0) throw ValidationError("augmented axis needs an odd count >= 3");
        g.aug_axis = Axis{-h, 2.0 * h / (n - 1), n};
    } else {
        g.aug_axis = Axis{0.0, 1.0, 1};
    }

    const long n_min = minimal_time_steps(spec, g.dx(), req.scheme);
    long n_t = req.n_t == 0 ? n_min : req.n_t;
    if (n_t < n_min) {
        std::ostringstream os;
        os << "CFL/monotonicity violated with n_t=" << req.n_t << "; minimal admissible n_t is " << n_min;
        throw CflError(os.str(), n_min);
    }
    g.n_t = n_t;
    g.dt = spec.T / static_cast<double>(n_t);
    return g;
}

}  // namespace sdg
