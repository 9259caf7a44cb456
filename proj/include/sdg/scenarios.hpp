#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/model.hpp"

namespace sdg {

// Terminal payoff descriptor. `cap` > 0 clips the payoff to [-cap, cap].
struct TerminalParams {
    std::string kind;  // empty: family default
    double c = 0.0;
    double a = 0.0;
    double cap = 0.0;
};

// Driver f = c + y_coef·g(y) + z_coef·h(ẑ_0) with g, h = identity ("linear")
// or sin, tanh ("nonlinear").
struct DriverParams {
    std::string kind = "zero";  // zero | linear | nonlinear
    double c = 0.0;
    double y_coef = 0.0;
    double z_coef = 0.0;
};

struct ScenarioParams {
    std::string family = "heat";  // heat | constant | example81 | matching_pennies | drift_control
    int dim = 1;
    double T = 1.0;
    double C0 = 1.0;
    double L0 = 0.0;
    double sigma = 1.0;             // isotropic diffusion scale
    std::optional<Mat> sigma_matrix;  // constant family: full σ
    Vec b{};                        // constant family drift coefficient
    double alpha = 0.3;             // example81 diffusion scale
    double a = 0.5;                 // example81 offset
    int u_points = 0;               // 0: family default
    int v_points = 0;
    double payoff_scale = 1.0;      // matching_pennies: f = scale·u·v
    TerminalParams terminal;
    DriverParams driver;
    AugKind aug = AugKind::none;
    int aug_points = 0;
    double half_width = 0.0;        // used for ρ0 of state-dependent payoffs
};

inline const std::vector<std::string>& scenario_families() {
    static const std::vector<std::string> names{"heat", "constant", "example81", "matching_pennies", "drift_control"};
    return names;
}

namespace detail {

inline TerminalFn make_terminal(const TerminalParams& tp, int dim, double half_width, double& lipschitz) {
    const double c = tp.c, a = tp.a;
    TerminalFn raw;
    if (tp.kind == "zero") {
        raw = [](const State&) { return 0.0; };
        lipschitz = 0.0;
    } else if (tp.kind == "constant") {
        raw = [c](const State&) { return c; };
        lipschitz = 0.0;
    } else if (tp.kind == "linear") {
        raw = [c](const State& s) { return c * s.x[0]; };
        lipschitz = std::abs(c);
    } else if (tp.kind == "quadratic") {
        raw = [dim](const State& s) { return dot(s.x, s.x, dim); };
        lipschitz = 2.0 * half_width * std::sqrt(static_cast<double>(dim));
    } else if (tp.kind == "abs") {
        raw = [](const State& s) { return std::abs(s.x[0]); };
        lipschitz = 1.0;
    } else if (tp.kind == "neg_abs") {
        raw = [](const State& s) { return -std::abs(s.x[0]); };
        lipschitz = 1.0;
    } else if (tp.kind == "cos") {
        raw = [](const State& s) { return std::cos(s.x[0]); };
        lipschitz = 1.0;
    } else if (tp.kind == "abs_diff") {
        if (dim != 2) throw ValidationError("terminal abs_diff needs dimension 2");
        raw = [a](const State& s) { return std::abs(a + s.x[0] - s.x[1]); };
        lipschitz = std::sqrt(2.0);
    } else if (tp.kind == "aug") {
        raw = [](const State& s) { return s.aug; };
        lipschitz = 1.0;
    } else {
        throw ValidationError("unknown terminal payoff kind '" + tp.kind + "'");
    }
    if (tp.cap > 0.0) {
        const double cap = tp.cap;
        return [raw, cap](const State& s) { return std::clamp(raw(s), -cap, cap); };
    }
    return raw;
}

inline DriverFn make_driver(const DriverParams& dp, double& lipschitz, bool& uses_z) {
    const double c = dp.c, ly = dp.y_coef, lz = dp.z_coef;
    uses_z = lz != 0.0;
    lipschitz = std::max(std::abs(ly), std::abs(lz));
    if (dp.kind == "zero") {
        lipschitz = 0.0;
        uses_z = false;
        return [](double, const State&, double, const Vec&, const ControlValue&, const ControlValue&) { return 0.0; };
    }
    if (dp.kind == "linear")
        return [c, ly, lz](double, const State&, double y, const Vec& z, const ControlValue&, const ControlValue&) {
            return c + ly * y + lz * z[0];
        };
    if (dp.kind == "nonlinear")
        return [c, ly, lz](double, const State&, double y, const Vec& z, const ControlValue&, const ControlValue&) {
            return c + ly * std::sin(y) + lz * std::tanh(z[0]);
        };
    throw ValidationError("unknown driver kind '" + dp.kind + "'");
}

}  // namespace detail

// Builds the GameSpec of a built-in coefficient family.
inline GameSpec make_spec(const ScenarioParams& p) {
    GameSpec g;
    g.family = p.family;
    g.T = p.T;
    g.aug = Augmentation{p.aug, p.aug_points};
    Coefficients& cf = g.coeffs;
    cf.C0 = p.C0;
    cf.L0 = p.L0;
    TerminalParams term = p.terminal;
    double driver_lip = 0.0;

    if (p.family == "heat") {
        g.dim = p.dim;
        const double s = p.sigma;
        const int d = p.dim;
        cf.sigma = [s, d](double, const ControlValue&, const ControlValue&) { return identity_mat(d, s); };
        cf.b = [](double, const ControlValue&, const ControlValue&) { return Vec{}; };
        g.U = ControlSet::singleton("U");
        g.V = ControlSet::singleton("V");
        if (term.kind.empty()) term.kind = "quadratic";
        cf.f = detail::make_driver(DriverParams{}, driver_lip, cf.driver_uses_z);
    } else if (p.family == "constant") {
        g.dim = p.dim;
        const Mat s = p.sigma_matrix ? *p.sigma_matrix : identity_mat(p.dim, p.sigma);
        const Vec b = p.b;
        cf.sigma = [s](double, const ControlValue&, const ControlValue&) { return s; };
        cf.b = [b](double, const ControlValue&, const ControlValue&) { return b; };
        g.U = ControlSet::singleton("U");
        g.V = ControlSet::singleton("V");
        if (term.kind.empty()) term.kind = "zero";
        cf.f = detail::make_driver(p.driver, driver_lip, cf.driver_uses_z);
    } else if (p.family == "example81") {
        g.dim = 2;
        const double alpha = p.alpha;
        cf.sigma = [alpha](double, const ControlValue&, const ControlValue&) { return identity_mat(2, alpha); };
        cf.b = [](double, const ControlValue& u, const ControlValue& v) { return Vec{u[0], v[0]}; };
        cf.drift_form = DriftForm::direct;
        g.U = ControlSet::grid("U", -1.0, 1.0, p.u_points > 0 ? p.u_points : 5);
        g.V = ControlSet::grid("V", -2.0, 2.0, p.v_points > 0 ? p.v_points : 5);
        if (term.kind.empty()) {
            term.kind = "abs_diff";
            term.a = p.a;
            if (term.cap == 0.0) term.cap = p.C0;
        }
        cf.f = detail::make_driver(DriverParams{}, driver_lip, cf.driver_uses_z);
    } else if (p.family == "matching_pennies") {
        g.dim = 1;
        const double s = p.sigma, k = p.payoff_scale;
        cf.sigma = [s](double, const ControlValue&, const ControlValue&) { return identity_mat(1, s); };
        cf.b = [](double, const ControlValue&, const ControlValue&) { return Vec{}; };
        g.U = ControlSet("U", {{-1.0, 0.0}, {1.0, 0.0}});
        g.V = ControlSet("V", {{-1.0, 0.0}, {1.0, 0.0}});
        cf.f = [k](double, const State&, double, const Vec&, const ControlValue& u, const ControlValue& v) {
            return k * u[0] * v[0];
        };
        if (term.kind.empty()) term.kind = "zero";
    } else if (p.family == "drift_control") {
        g.dim = 1;
        const double s = p.sigma;
        cf.sigma = [s](double, const ControlValue&, const ControlValue&) { return identity_mat(1, s); };
        cf.b = [](double, const ControlValue& u, const ControlValue&) { return Vec{u[0], 0.0}; };
        g.U = ControlSet::grid("U", -1.0, 1.0, p.u_points > 0 ? p.u_points : 2);
        g.V = ControlSet::singleton("V");
        if (term.kind.empty()) term.kind = "neg_abs";
        cf.f = detail::make_driver(DriverParams{}, driver_lip, cf.driver_uses_z);
    } else {
        throw ValidationError("unknown scenario family '" + p.family + "'");
    }
    if (g.dim < 1 || g.dim > kMaxDim) throw ValidationError("dimension must be 1 or 2");
    if (g.aug.kind != AugKind::none && g.dim != 1)
        throw ValidationError("the augmented statistic is supported for one-dimensional states only");

    const double hw = p.half_width > 0.0 ? p.half_width : default_half_width(g);
    double xi_lip = 0.0;
    cf.xi = detail::make_terminal(term, g.dim, hw, xi_lip);
    cf.rho0 = Modulus{Modulus::Kind::lipschitz, xi_lip, 1.0};
    return g;
}

}  // namespace sdg
