#pragma once

#include <cmath>

#include "sdg/chain.hpp"
#include "sdg/model.hpp"
#include "sdg/scenarios.hpp"

namespace sdg::testing {

inline ScenarioParams heat_params(int dim = 1, double sigma = 1.0) {
    ScenarioParams p;
    p.family = "heat";
    p.dim = dim;
    p.sigma = sigma;
    p.T = 1.0;
    p.half_width = 3.5;
    p.C0 = 1.0 + 3.5 * 3.5 * dim;
    return p;
}

inline ScenarioParams example81_params(double alpha = 0.3) {
    ScenarioParams p;
    p.family = "example81";
    p.alpha = alpha;
    p.a = 0.5;
    p.T = 1.0;
    p.C0 = 2.0;
    return p;
}

inline ScenarioParams pennies_params() {
    ScenarioParams p;
    p.family = "matching_pennies";
    p.T = 1.0;
    p.C0 = 1.0;
    return p;
}

inline ScenarioParams drift_control_params() {
    ScenarioParams p;
    p.family = "drift_control";
    p.T = 1.0;
    p.C0 = 4.0;
    return p;
}

inline ScenarioParams constant_params(int dim, double sigma) {
    ScenarioParams p;
    p.family = "constant";
    p.dim = dim;
    p.sigma = sigma;
    p.T = 1.0;
    p.C0 = 1.0;
    return p;
}

inline GridRequest request(int points, double half_width = 0.0, long n_t = 0) {
    GridRequest r;
    r.points = {points, points};
    r.half_width = half_width;
    r.n_t = n_t;
    return r;
}

}  // namespace sdg::testing
