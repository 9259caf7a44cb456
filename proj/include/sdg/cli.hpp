#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdg/chain.hpp"
#include "sdg/config.hpp"
#include "sdg/counterexample.hpp"
#include "sdg/diagnostics.hpp"
#include "sdg/dpp.hpp"
#include "sdg/errors.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/io.hpp"
#include "sdg/model.hpp"
#include "sdg/pdefd.hpp"
#include "sdg/saddle.hpp"
#include "sdg/scenarios.hpp"

namespace sdg::cli {

inline constexpr const char* kVersion = "0.3.0";

enum ExitCode : int { ok = 0, assertion_failed = 1, invalid_input = 2, internal_error = 3 };

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"solve", "isaacs-check", "counterexample", "saddle", "dpp-check", "diagnose"};
    return s;
}

struct Invocation {
    std::string subcommand;
    std::string config_path;  // empty: built-in defaults
    std::string out = "runs";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    Overrides overrides;
};

struct RunResult {
    int exit_code = ok;
    std::string out_dir;
    std::vector<std::string> artifacts;  // relative to out_dir; manifest excluded
    nlohmann::ordered_json summary;
    std::string message;
};

namespace detail {

using J = nlohmann::ordered_json;

struct Context {
    RunConfig cfg;
    std::string hash;
    std::filesystem::path dir;
    Parallelism par;
    std::vector<std::string> artifacts;
    std::ostream& log;

    void json(const std::string& name, const J& j) {
        io::write_json(dir / name, j);
        artifacts.push_back(name);
    }
    void text(const std::string& name, const std::string& t) {
        io::write_text(dir / name, t);
        artifacts.push_back(name);
    }
    std::uint64_t hash_value() const { return std::stoull(hash, nullptr, 16); }
};

struct Outcome {
    bool passed = true;
    J summary;
};

inline J vec_json(const Vec& v, int dim) {
    J a = J::array();
    for (int i = 0; i < dim; ++i) a.push_back(v[i]);
    return a;
}

inline GameSpec checked_spec(const RunConfig& cfg) {
    GameSpec spec = make_spec(cfg.scenario);
    const ValidationReport rep = validate_spec(spec, 2000, cfg.seed);
    if (!rep.passed()) {
        std::string msg = "scenario violates the standing assumptions:";
        for (const auto& c : rep.checks)
            if (!c.passed)
                msg += " " + c.name + " (worst " + io::num(c.worst) + " > " + io::num(c.bound) + " at " + c.witness + ")";
        throw ValidationError(msg);
    }
    return spec;
}

// Lower/upper lattice solutions, reusing the binary cache keyed by the config hash.
inline ValueField cached_field(Context& ctx, const GameSpec& spec, const Grid& grid, const TransitionKernel& kernel,
                               Side side, GameSolution* full = nullptr) {
    const std::string name = std::string("cache/") + (side == Side::lower ? "lower" : "upper") + ".bin";
    const auto path = ctx.dir / name;
    if (!full)
        if (auto f = io::load_field(path, ctx.hash_value()); f && f->nodes == grid.node_count() && f->n_t == grid.n_t) {
            ctx.artifacts.push_back(name);
            return *f;
        }
    GameSolution sol = solve_game(spec, grid, kernel, side, ctx.par);
    io::save_field(path, sol.field, ctx.hash_value());
    ctx.artifacts.push_back(name);
    if (full) {
        *full = std::move(sol);
        return full->field;
    }
    return std::move(sol.field);
}

inline double max_duality_violation(const ValueField& lower, const ValueField& upper) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lower.values.size(); ++i) worst = std::max(worst, lower.values[i] - upper.values[i]);
    return worst;
}

inline J grid_json(const Grid& g) {
    J j = {{"dim", g.dim}, {"n_t", g.n_t}, {"dt", g.dt}, {"points", J::array()}, {"dx", J::array()}, {"half_width", g.axes[0].hi()}};
    for (int i = 0; i < g.dim; ++i) {
        j["points"].push_back(g.axes[i].n);
        j["dx"].push_back(g.axes[i].dx);
    }
    j["scheme"] = g.scheme == Scheme::finite_difference ? "finite_difference" : "markov_chain";
    return j;
}

inline GridRequest refined(const GridRequest& r) {
    GridRequest f = r;
    f.n_t = 0;
    for (int& p : f.points) p = 2 * p - 1;
    return f;
}

struct Level {
    J json;
    double gap = 0.0;
};

inline Level solve_level(const GameSpec& spec, const GridRequest& req, const Parallelism& par) {
    const Grid g = build_grid(spec, req);
    double lo, up;
    if (g.scheme == Scheme::markov_chain) {
        const TransitionKernel k(spec, g);
        std::vector<double> term(g.node_count());
        sdg::detail::terminal_slice(spec, g, term);
        lo = backward_game(spec, k, Side::lower, term, g.n_t, 0, par)[g.origin()];
        up = backward_game(spec, k, Side::upper, term, g.n_t, 0, par)[g.origin()];
    } else {
        const PdeProblem prob(spec);
        lo = solve_pde(prob, g, PdeSide::lower, par).field.value(0, g.origin());
        up = solve_pde(prob, g, PdeSide::upper, par).field.value(0, g.origin());
    }
    Level l;
    l.gap = std::abs(up - lo);
    l.json = {{"points", g.axes[0].n}, {"n_t", g.n_t}, {"dx", g.axes[0].dx}, {"lower", lo}, {"upper", up}, {"gap", l.gap}};
    return l;
}

inline Outcome run_solve(Context& ctx) {
    const GameSpec spec = checked_spec(ctx.cfg);
    const Grid grid = build_grid(spec, ctx.cfg.grid);
    ValueField lower, upper;
    J extra;
    if (grid.scheme == Scheme::markov_chain) {
        const TransitionKernel kernel(spec, grid);
        lower = cached_field(ctx, spec, grid, kernel, Side::lower);
        upper = cached_field(ctx, spec, grid, kernel, Side::upper);
        extra = {{"clamped_stencils", kernel.clamped_count()},
                 {"max_mean_defect", kernel.max_mean_defect()},
                 {"max_cov_defect", kernel.max_cov_defect()},
                 {"z_fallbacks", lower.z_fallbacks + upper.z_fallbacks}};
    } else {
        const PdeProblem prob(spec);
        const PdeSolution l = solve_pde(prob, grid, PdeSide::lower, ctx.par);
        const PdeSolution u = solve_pde(prob, grid, PdeSide::upper, ctx.par);
        lower = l.field;
        upper = u.field;
        extra = {{"max_hamiltonian_gap", std::max(l.max_gap, u.max_gap)}};
    }
    ctx.text("values.csv", io::slice_csv(grid, 0, {"lower", "upper"}, {&lower, &upper}));

    const std::size_t o = grid.origin();
    const double viol = max_duality_violation(lower, upper);
    double max_gap = 0.0;
    for (std::size_t n = 0; n < grid.node_count(); ++n)
        max_gap = std::max(max_gap, std::abs(upper.value(0, n) - lower.value(0, n)));

    const Level coarse = solve_level(spec, ctx.cfg.grid, ctx.par);
    const Level fine = solve_level(spec, refined(ctx.cfg.grid), ctx.par);
    J refinement = {{"levels", {coarse.json, fine.json}},
                    {"origin_gap_halves", fine.gap <= coarse.gap / 2.0},
                    {"origin_change", std::abs(fine.json["lower"].get<double>() - coarse.json["lower"].get<double>())}};
    if (spec.family == "heat" && (ctx.cfg.scenario.terminal.kind.empty() || ctx.cfg.scenario.terminal.kind == "quadratic"))
        refinement["closed_form_origin"] = ctx.cfg.scenario.sigma * ctx.cfg.scenario.sigma * spec.dim * spec.T;
    ctx.json("refinement.json", refinement);

    J s = {{"grid", grid_json(grid)},
           {"lower_origin", lower.value(0, o)},
           {"upper_origin", upper.value(0, o)},
           {"max_initial_gap", max_gap},
           {"max_duality_violation", viol},
           {"weak_duality", viol <= 1e-10},
           {"diagnostics", extra}};
    ctx.json("solve.json", s);
    ctx.log << "solve: lower(0)=" << io::num(lower.value(0, o)) << " upper(0)=" << io::num(upper.value(0, o))
            << " n_t=" << grid.n_t << "\n";
    return {viol <= 1e-10, s};
}

inline Outcome run_isaacs(Context& ctx) {
    const GameSpec spec = checked_spec(ctx.cfg);
    const IsaacsReport r = isaacs_check(spec, ctx.cfg.isaacs_samples, ctx.cfg.isaacs_tolerance, ctx.cfg.seed);
    const HamiltonianInput& w = r.witness;
    J gamma = J::array();
    for (int i = 0; i < spec.dim; ++i) {
        J row = J::array();
        for (int j = 0; j < spec.dim; ++j) row.push_back(w.gamma[i][j]);
        gamma.push_back(row);
    }
    J s = {{"family", spec.family},
           {"samples", r.samples},
           {"tolerance", r.tolerance},
           {"max_gap", r.max_gap},
           {"passed", r.passed},
           {"witness", {{"t", w.t}, {"x", vec_json(w.x.x, spec.dim)}, {"y", w.y}, {"z", vec_json(w.z, spec.dim)}, {"gamma", gamma}}}};
    const HamiltonianResult h = lower_upper(w, spec);
    s["witness"]["lower"] = h.lower;
    s["witness"]["upper"] = h.upper;
    ctx.json("isaacs.json", s);
    ctx.log << "isaacs-check: max gap " << io::num(r.max_gap) << " over " << r.samples << " samples ("
            << (r.passed ? "holds" : "fails") << ")\n";
    return {r.passed, s};
}

inline J estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"std_error", e.std_error}, {"paths", e.paths}}; }

inline Outcome run_counterexample(Context& ctx) {
    const CounterexampleParams p = ctx.cfg.counterexample();
    p.validate();
    const StrongLowerResult lo = strong_lower_estimate(p, ctx.par);
    const StrongUpperResult up = strong_upper_estimate(p, default_candidates(p), ctx.par);
    const GameSpec weak_spec = make_spec(counterexample_scenario(p));
    std::vector<WeakLevel> weak;
    for (int pts : ctx.cfg.ce_weak_points) weak.push_back(weak_values(weak_spec, pts, ctx.par));
    const GapReport g = gap_report(p, lo, up, weak);

    J cands = J::array();
    std::string csv = "name,mean_x2,u0,payoff,std_error,at_least_T\n";
    for (const CandidatePayoff& c : up.candidates) {
        cands.push_back({{"name", c.name}, {"mean_x2", c.mean_x2}, {"u0", c.u0}, {"payoff", estimate_json(c.payoff)},
                         {"at_least_T", c.at_least_T}});
        csv += "\"" + c.name + "\"," + io::num(c.mean_x2) + "," + io::num(c.u0) + "," + io::num(c.payoff.mean) + "," +
               io::num(c.payoff.std_error) + "," + (c.at_least_T ? "1" : "0") + "\n";
    }
    J wl = J::array();
    for (const WeakLevel& w : g.weak)
        wl.push_back({{"points", w.points}, {"n_t", w.n_t}, {"dx", w.dx}, {"lower", w.lower}, {"upper", w.upper},
                      {"difference", w.difference()}});
    J s = {{"params", {{"alpha", p.alpha}, {"a", p.a}, {"T", p.T}, {"paths", p.n_paths}, {"seed", p.seed}}},
           {"regime", g.regime},
           {"strong_lower", {{"estimate", estimate_json(lo.estimate)},
                             {"analytic_bound", lo.analytic_bound},
                             {"gaussian_identity", lo.gaussian_identity}}},
           {"strong_upper", {{"bound", g.strong_upper_bound}, {"minimum", estimate_json(up.minimum)}, {"argmin", up.argmin},
                             {"all_at_least_T", up.all_at_least_T}, {"candidates", cands}}},
           {"strong_gap", g.strong_gap},
           {"required_gap", g.required_gap},
           {"gap_ok", g.gap_ok},
           {"weak", wl},
           {"weak_shrinks", g.weak_shrinks}};
    ctx.json("gap_report.json", s);
    ctx.text("candidates.csv", csv);
    ctx.log << "counterexample (" << g.regime << "): strong lower " << io::num(lo.estimate.mean) << " +- "
            << io::num(lo.estimate.std_error) << ", strong upper >= " << io::num(up.minimum.mean) << ", gap "
            << io::num(g.strong_gap) << "\n";
    return {g.gap_ok && g.weak_shrinks, s};
}

inline Outcome run_saddle(Context& ctx) {
    const GameSpec spec = checked_spec(ctx.cfg);
    const Grid grid = build_grid(spec, ctx.cfg.grid);
    const TransitionKernel kernel(spec, grid);
    GameSolution lower, upper;
    cached_field(ctx, spec, grid, kernel, Side::lower, &lower);
    cached_field(ctx, spec, grid, kernel, Side::upper, &upper);
    const SaddleExtraction ex = extract(spec, grid, kernel, lower, upper);
    const SaddleCertificate c = verify(spec, grid, kernel, ex, ctx.cfg.saddle_deviations, ctx.cfg.seed, &lower.field,
                                       &upper.field, ctx.par);
    J trials = J::array();
    std::string csv = "id,side,payoff,violation,within_epsilon\n";
    for (const DeviationTrial& t : c.trials) {
        trials.push_back({{"id", t.id}, {"side", t.side}, {"payoff", t.payoff}, {"violation", t.violation},
                          {"within_epsilon", t.within_epsilon}});
        csv += t.id + "," + t.side + "," + io::num(t.payoff) + "," + io::num(t.violation) + "," +
               (t.within_epsilon ? "1" : "0") + "\n";
    }
    J s = {{"grid", grid_json(grid)},
           {"lower_origin", ex.lower_at_origin},
           {"upper_origin", ex.upper_at_origin},
           {"max_gap", ex.max_gap},
           {"scheme_tolerance", ex.scheme_tolerance},
           {"epsilon_scheme", ex.epsilon_scheme},
           {"value_at_origin", c.value_at_origin},
           {"worst_violation", c.worst_violation},
           {"passed", c.passed},
           {"trials", trials}};
    ctx.json("certificate.json", s);
    ctx.text("deviations.csv", csv);
    ctx.log << "saddle: epsilon " << io::num(ex.epsilon_scheme) << ", worst violation " << io::num(c.worst_violation)
            << " over " << c.trials.size() << " trials\n";
    return {c.passed, s};
}

inline Outcome run_dpp_check(Context& ctx) {
    const GameSpec spec = checked_spec(ctx.cfg);
    const Grid grid = build_grid(spec, ctx.cfg.grid);
    const TransitionKernel kernel(spec, grid);
    if (grid.n_t < 2) throw ValidationError("dpp-check needs at least two time steps");
    J splits = J::array();
    bool exact = true;
    for (double f : ctx.cfg.dpp_splits) {
        const long k = std::clamp(std::lround(f * static_cast<double>(grid.n_t)), 1L, grid.n_t - 1);
        const double dev = dpp_consistency(spec, grid, kernel, k, {}, ctx.par);
        exact = exact && dev == 0.0;
        splits.push_back({{"fraction", f}, {"split_index", k}, {"deviation", dev}});
    }
    const ValueField lower = cached_field(ctx, spec, grid, kernel, Side::lower);
    const ValueField upper = cached_field(ctx, spec, grid, kernel, Side::upper);
    const double viol = max_duality_violation(lower, upper);
    J s = {{"grid", grid_json(grid)},
           {"splits", splits},
           {"recomposition_exact", exact},
           {"max_duality_violation", viol},
           {"weak_duality", viol <= 1e-10}};
    ctx.json("dpp_check.json", s);
    ctx.log << "dpp-check: " << splits.size() << " splits, recomposition " << (exact ? "exact" : "inexact") << "\n";
    return {exact && viol <= 1e-10, s};
}

inline J bound_json(const BoundReport& b) {
    return {{"bound", b.bound},           {"max_abs", b.max_abs},       {"worst_slice", b.worst_slice},
            {"worst_node", b.worst_node}, {"worst_value", b.worst_value}, {"violations", b.violations},
            {"passed", b.passed}};
}

inline std::string samples_csv(const std::vector<ModulusSample>& s) {
    std::string out = "k1,k2,n1,n2,distance,gap,reference\n";
    for (const auto& m : s)
        out += std::to_string(m.k1) + "," + std::to_string(m.k2) + "," + std::to_string(m.n1) + "," +
               std::to_string(m.n2) + "," + io::num(m.distance) + "," + io::num(m.gap) + "," + io::num(m.reference) +
               "\n";
    return out;
}

inline Outcome run_diagnose(Context& ctx) {
    const GameSpec spec = checked_spec(ctx.cfg);
    const Grid grid = build_grid(spec, ctx.cfg.grid);
    const TransitionKernel kernel(spec, grid);
    const ValueField lower = cached_field(ctx, spec, grid, kernel, Side::lower);
    const ValueField upper = cached_field(ctx, spec, grid, kernel, Side::upper);
    const BoundReport bl = check_bounds(lower, spec), bu = check_bounds(upper, spec);

    const RegularityReport fine = modulus_report(lower, spec, grid, ctx.cfg.diag_probes, ctx.cfg.seed);
    const Grid cgrid = build_grid(spec, sdg::detail::coarse_request(ctx.cfg.grid));
    const TransitionKernel ckernel(spec, cgrid);
    const ValueField clower = solve_game(spec, cgrid, ckernel, Side::lower, ctx.par).field;
    const RegularityReport coarse = modulus_report(clower, spec, cgrid, ctx.cfg.diag_probes, ctx.cfg.seed);
    const ModulusStability st = modulus_stability(coarse, fine);
    ctx.text("modulus_spatial.csv", samples_csv(fine.spatial));
    ctx.text("modulus_temporal.csv", samples_csv(fine.temporal));

    const AprioriReport ap = bsde_apriori(spec, grid, kernel, ctx.cfg.diag_trials, ctx.cfg.seed, ctx.cfg.diag_paths, ctx.par);
    J trials = J::array();
    for (const AprioriTrial& t : ap.trials)
        trials.push_back({{"seed", t.seed}, {"start_slice", t.start_slice}, {"start_node", t.start_node},
                          {"delta", t.delta}, {"i0", t.i0}, {"eta_l2", t.eta_l2}, {"sup_sq", t.sup_sq},
                          {"sup_abs", t.sup_abs}, {"z_energy", t.z_energy}, {"energy_bound", t.energy_bound},
                          {"short_bound", t.short_bound}, {"energy_ok", t.energy_ok}, {"short_ok", t.short_ok}});
    auto modulus_json = [](const RegularityReport& r, const Grid& g) {
        return J{{"points", g.axes[0].n}, {"probes", r.probes}, {"spatial_constant", r.spatial_constant},
                 {"temporal_constant", r.temporal_constant}, {"spatial_passed", r.spatial_passed},
                 {"temporal_passed", r.temporal_passed}};
    };
    const bool passed = bl.passed && bu.passed && st.passed && ap.passed;
    J s = {{"grid", grid_json(grid)},
           {"bounds", {{"lower", bound_json(bl)}, {"upper", bound_json(bu)}}},
           {"modulus", {{"coarse", modulus_json(coarse, cgrid)}, {"fine", modulus_json(fine, grid)},
                        {"spatial_ratio", st.spatial_ratio}, {"temporal_ratio", st.temporal_ratio},
                        {"stable", st.passed}}},
           {"apriori", {{"growth", ap.growth}, {"c_short", ap.c_short}, {"z_free_driver", ap.z_free_driver},
                        {"paths", ap.paths}, {"passed", ap.passed}, {"trials", trials}}},
           {"passed", passed}};
    ctx.json("diagnostics.json", s);
    ctx.log << "diagnose: bounds " << (bl.passed && bu.passed ? "pass" : "FAIL") << ", modulus "
            << (st.passed ? "stable" : "UNSTABLE") << ", a-priori " << (ap.passed ? "pass" : "FAIL") << "\n";
    return {passed, s};
}

}  // namespace detail

inline RunResult run(const Invocation& inv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    RunResult res;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (std::find(subcommands().begin(), subcommands().end(), inv.subcommand) == subcommands().end())
            throw ValidationError("unknown subcommand '" + inv.subcommand + "'");
        RunConfig cfg = load_config(inv.config_path, inv.overrides);
        if (inv.seed) cfg.seed = *inv.seed;
        if (inv.threads) cfg.threads = *inv.threads;
        if (cfg.threads < 1) throw ValidationError("threads must be at least 1");
        detail::Context ctx{cfg, config_hash(cfg), {}, Parallelism{cfg.threads}, {}, log};
        ctx.dir = std::filesystem::path(inv.out) / ctx.hash;
        std::filesystem::create_directories(ctx.dir);
        res.out_dir = ctx.dir.string();

        detail::Outcome out;
        int code = ok;
        try {
            if (inv.subcommand == "solve") out = detail::run_solve(ctx);
            else if (inv.subcommand == "isaacs-check") out = detail::run_isaacs(ctx);
            else if (inv.subcommand == "counterexample") out = detail::run_counterexample(ctx);
            else if (inv.subcommand == "saddle") out = detail::run_saddle(ctx);
            else if (inv.subcommand == "dpp-check") out = detail::run_dpp_check(ctx);
            else out = detail::run_diagnose(ctx);
            code = out.passed ? ok : assertion_failed;
        } catch (const RefusalError& e) {
            out.passed = false;
            out.summary = {{"refused", e.what()}};
            ctx.json(inv.subcommand + "_refusal.json", out.summary);
            res.message = e.what();
            code = assertion_failed;
        }
        std::sort(ctx.artifacts.begin(), ctx.artifacts.end());
        ctx.artifacts.erase(std::unique(ctx.artifacts.begin(), ctx.artifacts.end()), ctx.artifacts.end());
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const detail::J manifest = {
            {"manifest_version", 1},
            {"config_hash", ctx.hash},
            {"subcommand", inv.subcommand},
            {"config", to_json(cfg)},
            {"parameters", {{"seed", cfg.seed}, {"threads", cfg.threads}, {"out", inv.out}}},
            {"artifacts", ctx.artifacts},
            {"wall_clock_seconds", wall},
            {"solver_versions",
             {{"sdg", kVersion},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
            {"exit_code", code},
            {"rerun", "sdg_lab " + inv.subcommand + " --config " + (ctx.dir / ("manifest_" + inv.subcommand + ".json")).string()}};
        io::write_json(ctx.dir / ("manifest_" + inv.subcommand + ".json"), manifest);
        res.exit_code = code;
        res.artifacts = ctx.artifacts;
        res.summary = out.summary;
        if (code != ok) err << inv.subcommand << ": assertion failed" << (res.message.empty() ? "" : ": " + res.message) << "\n";
        log << "artifacts: " << res.out_dir << "\n";
    } catch (const ValidationError& e) {
        res.exit_code = invalid_input;
        res.message = e.what();
    } catch (const CflError& e) {
        res.exit_code = invalid_input;
        res.message = e.what();
    } catch (const StencilError& e) {
        res.exit_code = invalid_input;
        res.message = e.what();
    } catch (const std::exception& e) {
        res.exit_code = internal_error;
        res.message = e.what();
    }
    if (res.exit_code == invalid_input) err << "invalid input: " << res.message << "\n";
    if (res.exit_code == internal_error) err << "error: " << res.message << "\n";
    return res;
}

// Command-line front end.
inline int main(int argc, char** argv) {
    CLI::App app{"Weak-formulation stochastic differential game lab"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Invocation inv;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    struct Numeric {
        const char* flag;
        const char* key;
        const char* help;
    };
    auto add = [&](const std::string& name, const std::string& help, std::vector<Numeric> numerics) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", inv.config_path, "YAML config (or a run manifest)");
        sub->add_option("--out", inv.out, "output root; artifacts go to <out>/<config hash>")->capture_default_str();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "worker threads (does not change results)");
        sub->add_option("--set", sets, "override any config key, e.g. --set scenario.alpha=0.2");
        for (const Numeric& n : numerics) {
            auto* opt = sub->add_option(n.flag, n.help);
            const std::string key = n.key;
            opt->each([&inv, key](const std::string& v) { inv.overrides[key] = v; });
            opt->check(CLI::Number);
        }
        sub->callback([&inv, name] { inv.subcommand = name; });
    };
    add("solve", "solve the lower and upper lattice games", {{"--points", "grid.points", "points per axis"},
                                                             {"--n-t", "grid.n_t", "time steps"},
                                                             {"--half-width", "grid.half_width", "domain half-width"},
                                                             {"--T", "scenario.T", "horizon"}});
    add("isaacs-check", "sample the Hamiltonian gap",
        {{"--samples", "isaacs.samples", "sample count"}, {"--tolerance", "isaacs.tolerance", "allowed gap"}});
    add("counterexample", "strong-formulation gap of the two-player drift game",
        {{"--alpha", "counterexample.alpha", "diffusion scale"},
         {"--a", "counterexample.a", "payoff offset"},
         {"--T", "counterexample.T", "horizon"},
         {"--paths", "counterexample.paths", "Monte Carlo paths"}});
    add("saddle", "extract and certify an epsilon-saddle pair",
        {{"--deviations", "saddle.deviations", "random deviations per player"}, {"--points", "grid.points", "points per axis"}});
    add("dpp-check", "split-and-recompose consistency of the recursion", {{"--points", "grid.points", "points per axis"}});
    add("diagnose", "bound, modulus and a-priori suites",
        {{"--probes", "diagnose.probes", "modulus probes"},
         {"--trials", "diagnose.trials", "random policy pairs"},
         {"--paths", "diagnose.paths", "paths per trial"},
         {"--points", "grid.points", "points per axis"}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : invalid_input;
    }
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "invalid input: --set expects key=value, got '" << s << "'\n";
            return invalid_input;
        }
        inv.overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const CLI::App* sub : app.get_subcommands())
        if (sub->count("--seed")) inv.seed = seed;
    for (const CLI::App* sub : app.get_subcommands())
        if (sub->count("--threads")) inv.threads = threads;
    return run(inv).exit_code;
}

}  // namespace sdg::cli
