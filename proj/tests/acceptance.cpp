// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sdg/cli.hpp"
#include "sdg/counterexample.hpp"
#include "sdg/diagnostics.hpp"
#include "sdg/dpp.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/io.hpp"
#include "sdg/pdefd.hpp"
#include "sdg/saddle.hpp"
#include "sdg/scenarios.hpp"

namespace {

using namespace sdg;
using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::string detail;
};

std::string fmt(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

GridRequest req(int points, double half_width = 0.0, Scheme scheme = Scheme::markov_chain) {
    GridRequest r;
    r.points = {points, points};
    r.half_width = half_width;
    r.scheme = scheme;
    return r;
}

struct Builtin {
    std::string name;
    ScenarioParams params;
};

std::vector<Builtin> builtins() {
    std::vector<Builtin> out;
    ScenarioParams heat;
    heat.family = "heat";
    heat.half_width = 3.5;
    heat.C0 = 1.0 + 3.5 * 3.5;
    out.push_back({"heat", heat});
    ScenarioParams heat2 = heat;
    heat2.dim = 2;
    heat2.C0 = 1.0 + 2.0 * 3.5 * 3.5;
    out.push_back({"heat-2d", heat2});
    ScenarioParams cst;
    cst.family = "constant";
    cst.dim = 2;
    cst.sigma_matrix = Mat{{{0.8, 0.2}, {0.2, 0.6}}};
    cst.b = {0.4, -0.7};
    cst.driver = DriverParams{"nonlinear", 0.1, 0.8, 0.0};
    cst.terminal = TerminalParams{"cos", 0.0, 0.0, 0.0};
    cst.L0 = 0.8;
    cst.C0 = 1.0;
    out.push_back({"constant", cst});
    ScenarioParams ex;
    ex.family = "example81";
    ex.C0 = 2.0;
    out.push_back({"example81", ex});
    ScenarioParams pen;
    pen.family = "matching_pennies";
    pen.C0 = 1.0;
    out.push_back({"matching_pennies", pen});
    ScenarioParams dc;
    dc.family = "drift_control";
    dc.C0 = 4.0;
    out.push_back({"drift_control", dc});
    ScenarioParams mx = heat;
    mx.terminal = TerminalParams{"abs", 0.0, 0.0, 0.0};
    mx.aug = AugKind::running_max;
    mx.C0 = 3.5;
    out.push_back({"heat-running-max", mx});
    ScenarioParams av = mx;
    av.aug = AugKind::running_average;
    av.aug_points = 21;
    out.push_back({"heat-running-average", av});
    return out;
}

// 1. Strong-formulation gap of the two-player drift game.
Verdict counterexample_gap() {
    const auto t0 = Clock::now();
    CounterexampleParams p;
    p.alpha = 0.3;
    p.a = 0.5;
    p.T = 1.0;
    p.n_paths = 100000;
    const StrongLowerResult lo = strong_lower_estimate(p);
    const StrongUpperResult up = strong_upper_estimate(p, default_candidates(p));
    const GapReport g = gap_report(p, lo, up, {});
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const double se = lo.estimate.std_error;
    Verdict v;
    v.pass = lo.estimate.mean <= lo.analytic_bound + 3.0 * se &&
             std::abs(lo.estimate.mean - lo.gaussian_identity) <= 3.0 * se && up.all_at_least_T &&
             g.strong_gap >= 0.5 && secs <= 30.0;
    v.detail = "lower " + fmt(lo.estimate.mean) + " +- " + fmt(se, 2) + " (bound " + fmt(lo.analytic_bound) +
               ", identity " + fmt(lo.gaussian_identity) + "), min best-response payoff " + fmt(up.minimum.mean) +
               ", gap " + fmt(g.strong_gap) + ", " + fmt(secs, 2) + " s";
    return v;
}

// 2. Lower and upper lattice values agree at the origin and the gap halves.
Verdict weak_value_existence() {
    const auto t0 = Clock::now();
    CounterexampleParams p;
    const GameSpec spec = make_spec(counterexample_scenario(p));
    const WeakLevel a = weak_values(spec, 101);
    const WeakLevel b = weak_values(spec, 201);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    Verdict v;
    v.pass = a.difference() <= 5e-3 && b.difference() <= a.difference() / 2.0 && secs <= 300.0;
    v.detail = "|U-L| " + fmt(a.difference()) + " at 101 (n_t " + std::to_string(a.n_t) + "), " +
               fmt(b.difference()) + " at 201 (n_t " + std::to_string(b.n_t) + "), value " + fmt(a.lower) + ", " +
               fmt(secs, 2) + " s";
    return v;
}

// 3. Lattice and finite-difference solvers against closed form and each other.
Verdict cross_oracle() {
    const auto t0 = Clock::now();
    ScenarioParams heat;
    heat.family = "heat";
    heat.half_width = 6.0;
    heat.C0 = 37.0;
    const GameSpec hs = make_spec(heat);
    const Grid lg = build_grid(hs, req(201, 6.0));
    const TransitionKernel k(hs, lg);
    std::vector<double> term(lg.node_count());
    detail::terminal_slice(hs, lg, term);
    const double dpp = backward_game(hs, k, Side::lower, term, lg.n_t, 0)[lg.origin()];
    const Grid fg = build_grid(hs, req(201, 6.0, Scheme::finite_difference));
    const double pde = solve_pde(PdeProblem(hs), fg, PdeSide::isaacs).field.value(0, fg.origin());

    ScenarioParams dc;
    dc.family = "drift_control";
    dc.C0 = 4.0;
    const GameSpec ds = make_spec(dc);
    const CrossCheckReport cc =
        cross_check(ds, req(201), req(201, 0.0, Scheme::finite_difference), 5e-3, {Vec{}});
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    Verdict v;
    v.pass = std::abs(dpp - 1.0) <= 2e-3 && std::abs(pde - 1.0) <= 2e-3 && cc.passed && secs <= 120.0;
    v.detail = "heat dpp " + fmt(dpp, 8) + ", pdefd " + fmt(pde, 8) + "; drift control |dpp-pdefd| " +
               fmt(cc.max_deviation) + ", " + fmt(secs, 2) + " s";
    return v;
}

// 4. Sampled Hamiltonian gap.
Verdict isaacs() {
    ScenarioParams ex;
    ex.family = "example81";
    ex.C0 = 2.0;
    const IsaacsReport a = isaacs_check(make_spec(ex), 10000, 1e-12);
    ScenarioParams pen;
    pen.family = "matching_pennies";
    pen.C0 = 1.0;
    const IsaacsReport b = isaacs_check(make_spec(pen), 10000, 1e-12);
    Verdict v;
    v.pass = a.passed && a.max_gap <= 1e-12 && b.max_gap == 2.0;
    v.detail = "example81 gap " + fmt(a.max_gap) + ", matching pennies gap " + fmt(b.max_gap, 17) +
               " (10000 samples each)";
    return v;
}

// 5. Lower ≤ upper at every node.
Verdict weak_duality() {
    Verdict v;
    double worst = -1e300;
    for (const Builtin& b : builtins()) {
        const GameSpec spec = make_spec(b.params);
        const Grid g = build_grid(spec, req(b.params.dim == 2 || b.params.family == "example81" ? 41 : 101));
        const TransitionKernel k(spec, g);
        const ValueField lo = solve_game(spec, g, k, Side::lower).field;
        const ValueField up = solve_game(spec, g, k, Side::upper).field;
        double w = -1e300;
        for (std::size_t i = 0; i < lo.values.size(); ++i) w = std::max(w, lo.values[i] - up.values[i]);
        worst = std::max(worst, w);
        if (w > 1e-10) {
            v.pass = false;
            v.detail += b.name + " violates by " + fmt(w) + "; ";
        }
    }
    v.detail += "max(lower - upper) " + fmt(worst) + " over " + std::to_string(builtins().size()) + " scenarios";
    return v;
}

// 6. Random ordered field pairs through one step and one game slice. An
// inversion counts as a violation when it exceeds the rounding bound of the
// step, (moves + 4)·ε·(1 + max|v|).
Verdict monotonicity() {
    ScenarioParams p;
    p.family = "constant";
    p.dim = 2;
    p.sigma_matrix = Mat{{{0.8, 0.2}, {0.2, 0.6}}};
    p.b = {0.4, -0.7};
    p.driver = DriverParams{"nonlinear", 0.1, 0.8, 0.0};
    p.L0 = 0.8;
    const GameSpec cs = make_spec(p);
    ScenarioParams e;
    e.family = "example81";
    e.C0 = 2.0;
    GameSpec es = make_spec(e);
    es.coeffs.L0 = 0.5;
    es.coeffs.f = [](double, const State& x, double y, const Vec&, const ControlValue& u, const ControlValue& v) {
        return 0.5 * std::sin(y) + 0.2 * u[0] * v[0] + 0.1 * x.x[0];
    };
    std::size_t violations = 0, inversions = 0, checks = 0;
    double max_dtl0 = 0.0, worst = 0.0;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-3.0, 3.0), w(0.0, 1.0);
    const std::vector<std::pair<const GameSpec*, GridRequest>> cases{{&cs, req(15, 2.0)}, {&es, req(15)}};
    for (const auto& [spec, r] : cases) {
        const Grid g = build_grid(*spec, r);
        const TransitionKernel k(*spec, g);
        max_dtl0 = std::max(max_dtl0, g.dt * spec->coeffs.L0);
        std::vector<double> out_lo(g.node_count()), out_hi(g.node_count()), zs(g.node_count() * g.dim);
        std::size_t moves = 0;
        for (std::size_t iu = 0; iu < k.u_count(); ++iu)
            for (std::size_t iv = 0; iv < k.v_count(); ++iv) moves = std::max(moves, k.stencil(0, iu, iv).moves.size());
        const double tol = static_cast<double>(moves + 4) * std::numeric_limits<double>::epsilon() * (1.0 + 4.0);  // fields lie in [-3, 4]
        auto compare = [&](double a, double b) {
            ++checks;
            if (a <= b) return;
            ++inversions;
            worst = std::max(worst, a - b);
            if (a - b > tol) ++violations;
        };
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<double> lo(g.node_count()), hi(lo.size());
            for (std::size_t n = 0; n < lo.size(); ++n) {
                lo[n] = d(rng);
                hi[n] = lo[n] + (w(rng) < 0.5 ? 0.0 : w(rng));
            }
            for (std::size_t n = 0; n < lo.size(); ++n)
                for (std::size_t iu = 0; iu < k.u_count(); ++iu)
                    for (std::size_t iv = 0; iv < k.v_count(); ++iv)
                        compare(one_step(lo, n, 0, iu, iv, k, *spec).y, one_step(hi, n, 0, iu, iv, k, *spec).y);
            for (Side side : {Side::lower, Side::upper}) {
                detail::game_slice(*spec, k, side, 0, lo, out_lo, zs, nullptr, nullptr, {});
                detail::game_slice(*spec, k, side, 0, hi, out_hi, zs, nullptr, nullptr, {});
                for (std::size_t n = 0; n < lo.size(); ++n) compare(out_lo[n], out_hi[n]);
            }
        }
    }
    Verdict v;
    v.pass = violations == 0 && max_dtl0 < 1.0;
    v.detail = std::to_string(violations) + " violations in " + std::to_string(checks) +
               " comparisons over 1000 field pairs (" + std::to_string(inversions) +
               " rounding-level inversions, largest " + fmt(worst, 3) + "), max dt*L0 " + fmt(max_dtl0);
    return v;
}

// 7. Split-and-recompose deviation at every split index.
Verdict dpp_consistency_all() {
    Verdict v;
    double worst = 0.0;
    std::size_t splits = 0;
    for (const Builtin& b : builtins()) {
        const GameSpec spec = make_spec(b.params);
        const Grid g = build_grid(spec, req(b.params.dim == 2 || b.params.family == "example81" ? 21 : 41));
        const TransitionKernel k(spec, g);
        for (long s = 1; s < g.n_t; ++s, ++splits) {
            const double dev = dpp_consistency(spec, g, k, s);
            worst = std::max(worst, dev);
            if (dev != 0.0) {
                v.pass = false;
                v.detail += b.name + " split " + std::to_string(s) + " deviates " + fmt(dev) + "; ";
            }
        }
    }
    v.detail += "max deviation " + fmt(worst) + " over " + std::to_string(splits) + " splits";
    return v;
}

// 8. Epsilon-saddle certificate and its refinement trend.
Verdict saddle_certificate() {
    ScenarioParams ex;
    ex.family = "example81";
    ex.C0 = 2.0;
    const GameSpec spec = make_spec(ex);
    auto extraction = [&](int points, std::size_t deviations, SaddleCertificate* cert) {
        const Grid g = build_grid(spec, req(points));
        const TransitionKernel k(spec, g);
        const GameSolution lo = solve_game(spec, g, k, Side::lower);
        const GameSolution up = solve_game(spec, g, k, Side::upper);
        const SaddleExtraction e = extract(spec, g, k, lo, up);
        if (cert) *cert = verify(spec, g, k, e, deviations, 20130412, &lo.field, &up.field);
        return e;
    };
    SaddleCertificate cert;
    const SaddleExtraction coarse = extraction(101, 100, &cert);
    const SaddleExtraction fine = extraction(201, 0, nullptr);
    std::size_t beyond = 0;
    for (const auto& t : cert.trials) beyond += t.within_epsilon ? 0 : 1;
    Verdict v;
    v.pass = cert.passed && beyond == 0 && fine.epsilon_scheme < coarse.epsilon_scheme;
    v.detail = std::to_string(cert.trials.size()) + " trials, " + std::to_string(beyond) +
               " beyond epsilon, worst gain " + fmt(cert.worst_violation) + "; epsilon " +
               fmt(coarse.epsilon_scheme) + " (101) -> " + fmt(fine.epsilon_scheme) + " (201)";
    return v;
}

// 9. Value bound and a-priori BSDE estimates.
Verdict bounds_and_apriori() {
    Verdict v;
    std::size_t trials = 0;
    double worst_ratio = 0.0;
    for (const Builtin& b : builtins()) {
        const GameSpec spec = make_spec(b.params);
        const Grid g = build_grid(spec, req(101));
        const TransitionKernel k(spec, g);
        for (Side side : {Side::lower, Side::upper}) {
            const BoundReport r = check_bounds(solve_game(spec, g, k, side).field, spec);
            worst_ratio = std::max(worst_ratio, r.max_abs / r.bound);
            if (!r.passed) {
                v.pass = false;
                v.detail += b.name + " exceeds bound " + fmt(r.bound) + "; ";
            }
        }
        const Grid sg = build_grid(spec, req(b.params.dim == 2 || b.params.family == "example81" ? 41 : 101));
        const TransitionKernel sk(spec, sg);
        const AprioriReport a = bsde_apriori(spec, sg, sk, 20, 99, 128);
        trials += a.trials.size();
        if (!a.passed || !a.z_free_driver) {
            v.pass = false;
            v.detail += b.name + " a-priori estimate fails; ";
        }
    }
    v.detail += "max |V|/C " + fmt(worst_ratio) + ", " + std::to_string(trials) + " a-priori trials";
    return v;
}

// 10. Byte-identical artifacts for one and four threads.
Verdict determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "sdg_acceptance_determinism";
    fs::remove_all(root);
    Verdict v;
    std::size_t compared = 0;
    for (const std::string sub : {"solve", "isaacs-check", "dpp-check", "saddle", "diagnose", "counterexample"}) {
        std::vector<cli::RunResult> runs;
        for (unsigned threads : {1u, 4u}) {
            cli::Invocation inv;
            inv.subcommand = sub;
            inv.out = (root / std::to_string(threads)).string();
            inv.threads = threads;
            inv.overrides = {{"scenario.family", "example81"}, {"scenario.C0", "2"},         {"grid.points", "41"},
                             {"saddle.deviations", "10"},      {"diagnose.trials", "10"},    {"diagnose.probes", "500"},
                             {"isaacs.samples", "2000"},       {"counterexample.paths", "20000"}};
            std::ostringstream log, err;
            runs.push_back(cli::run(inv, log, err));
        }
        if (runs[0].exit_code != cli::ok || runs[1].exit_code != cli::ok || runs[0].artifacts != runs[1].artifacts) {
            v.pass = false;
            v.detail += sub + " run mismatch; ";
            continue;
        }
        for (const auto& name : runs[0].artifacts) {
            ++compared;
            if (io::read_text(fs::path(runs[0].out_dir) / name) != io::read_text(fs::path(runs[1].out_dir) / name)) {
                v.pass = false;
                v.detail += sub + "/" + name + " differs; ";
            }
        }
    }
    fs::remove_all(root);
    v.detail += std::to_string(compared) + " artifacts compared across threads=1 and threads=4";
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"counterexample strong gap", counterexample_gap},
        {"weak value existence", weak_value_existence},
        {"cross-oracle dpp vs pdefd", cross_oracle},
        {"isaacs checker", isaacs},
        {"discrete weak duality", weak_duality},
        {"one-step monotonicity", monotonicity},
        {"dpp consistency", dpp_consistency_all},
        {"epsilon-saddle certificate", saddle_certificate},
        {"bound and a-priori suites", bounds_and_apriori},
        {"determinism across threads", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
