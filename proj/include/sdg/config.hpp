#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "sdg/counterexample.hpp"
#include "sdg/errors.hpp"
#include "sdg/model.hpp"
#include "sdg/scenarios.hpp"

namespace sdg {

struct RunConfig {
    ScenarioParams scenario;
    GridRequest grid;
    std::uint64_t seed = 20130412;
    unsigned threads = 1;  // excluded from the hash

    std::size_t isaacs_samples = 10000;
    double isaacs_tolerance = 1e-12;

    double ce_alpha = 0.3;
    double ce_a = 0.5;
    double ce_T = 1.0;
    std::size_t ce_paths = 100000;
    std::size_t ce_batch = 8192;
    std::vector<int> ce_weak_points{21, 41};

    std::size_t saddle_deviations = 100;

    std::size_t diag_probes = 2000;
    std::size_t diag_trials = 50;
    std::size_t diag_paths = 256;

    std::vector<double> dpp_splits{0.25, 0.5, 0.75};  // fractions of n_t

    CounterexampleParams counterexample() const {
        CounterexampleParams p;
        p.alpha = ce_alpha;
        p.a = ce_a;
        p.T = ce_T;
        p.n_paths = ce_paths;
        p.seed = seed;
        p.batch_paths = ce_batch;
        return p;
    }
};

// Dotted key -> scalar text, applied to the YAML tree before parsing.
using Overrides = std::map<std::string, std::string>;

namespace detail {

inline const char* scheme_name(Scheme s) { return s == Scheme::finite_difference ? "finite_difference" : "markov_chain"; }

template <class T>
void read(const YAML::Node& n, const char* key, T& out) {
    if (!n || n.IsNull() || !n[key]) return;
    try {
        out = n[key].as<T>();
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("config key '") + key + "': " + e.what());
    }
}

inline AugKind parse_aug(const std::string& s) {
    if (s == "none") return AugKind::none;
    if (s == "running_max") return AugKind::running_max;
    if (s == "running_average") return AugKind::running_average;
    throw ValidationError("unknown augmentation '" + s + "'");
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "markov_chain") return Scheme::markov_chain;
    if (s == "finite_difference") return Scheme::finite_difference;
    throw ValidationError("unknown scheme '" + s + "'");
}

inline void check_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!n || n.IsNull()) return;
    if (!n.IsMap()) throw ValidationError("config section '" + where + "' must be a mapping");
    for (const auto& kv : n) {
        const std::string k = kv.first.as<std::string>();
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ValidationError("unknown config key '" + where + (where.empty() ? "" : ".") + k + "'");
    }
}

inline void apply_override(YAML::Node root, const std::string& key, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    if (parts.empty()) throw ValidationError("empty override key");
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) chain.push_back(chain.back()[parts[i]]);
    chain.back()[parts.back()] = YAML::Load(value);
}

}  // namespace detail

namespace detail {

inline RunConfig parse_config_tree(const YAML::Node& root_in, const Overrides& overrides) {
    YAML::Node root = YAML::Clone(root_in);
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    // A run manifest carries its configuration under "config".
    if (root.IsMap() && root["manifest_version"]) root = YAML::Clone(root["config"]);
    for (const auto& [k, v] : overrides) detail::apply_override(root, k, v);
    detail::check_keys(root, "", {"scenario", "grid", "seed", "threads", "isaacs", "counterexample", "saddle",
                                  "diagnose", "dpp_check"});

    RunConfig c;
    const YAML::Node s = root["scenario"];
    detail::check_keys(s, "scenario", {"family", "dim", "T", "C0", "L0", "sigma", "sigma_matrix", "b", "alpha", "a",
                                       "u_points", "v_points", "payoff_scale", "terminal", "driver", "aug",
                                       "aug_points", "half_width"});
    ScenarioParams& p = c.scenario;
    detail::read(s, "family", p.family);
    detail::read(s, "dim", p.dim);
    detail::read(s, "T", p.T);
    detail::read(s, "C0", p.C0);
    detail::read(s, "L0", p.L0);
    detail::read(s, "sigma", p.sigma);
    detail::read(s, "alpha", p.alpha);
    detail::read(s, "a", p.a);
    detail::read(s, "u_points", p.u_points);
    detail::read(s, "v_points", p.v_points);
    detail::read(s, "payoff_scale", p.payoff_scale);
    detail::read(s, "aug_points", p.aug_points);
    detail::read(s, "half_width", p.half_width);
    if (s && s["aug"]) p.aug = detail::parse_aug(s["aug"].as<std::string>());
    if (s && s["b"]) {
        const auto b = s["b"].as<std::vector<double>>();
        if (b.empty() || b.size() > 2) throw ValidationError("scenario.b needs one or two entries");
        for (std::size_t i = 0; i < b.size(); ++i) p.b[i] = b[i];
    }
    if (s && s["sigma_matrix"]) {
        const auto rows = s["sigma_matrix"].as<std::vector<std::vector<double>>>();
        if (rows.empty() || rows.size() > 2) throw ValidationError("scenario.sigma_matrix needs one or two rows");
        Mat m{};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size()) throw ValidationError("scenario.sigma_matrix must be square");
            for (std::size_t j = 0; j < rows.size(); ++j) m[i][j] = rows[i][j];
        }
        p.sigma_matrix = m;
    }
    const YAML::Node term = s ? s["terminal"] : YAML::Node();
    detail::check_keys(term, "scenario.terminal", {"kind", "c", "a", "cap"});
    detail::read(term, "kind", p.terminal.kind);
    detail::read(term, "c", p.terminal.c);
    detail::read(term, "a", p.terminal.a);
    detail::read(term, "cap", p.terminal.cap);
    const YAML::Node drv = s ? s["driver"] : YAML::Node();
    detail::check_keys(drv, "scenario.driver", {"kind", "c", "y_coef", "z_coef"});
    detail::read(drv, "kind", p.driver.kind);
    detail::read(drv, "c", p.driver.c);
    detail::read(drv, "y_coef", p.driver.y_coef);
    detail::read(drv, "z_coef", p.driver.z_coef);

    const YAML::Node g = root["grid"];
    detail::check_keys(g, "grid", {"points", "n_t", "half_width", "aug_points", "scheme", "allow_degenerate"});
    if (g && g["points"]) {
        if (g["points"].IsSequence()) {
            const auto pts = g["points"].as<std::vector<int>>();
            if (pts.empty() || pts.size() > 2) throw ValidationError("grid.points needs one or two entries");
            c.grid.points = {pts[0], pts.size() > 1 ? pts[1] : pts[0]};
        } else {
            const int n = g["points"].as<int>();
            c.grid.points = {n, n};
        }
    }
    detail::read(g, "n_t", c.grid.n_t);
    detail::read(g, "half_width", c.grid.half_width);
    detail::read(g, "aug_points", c.grid.aug_points);
    detail::read(g, "allow_degenerate", c.grid.allow_degenerate);
    if (g && g["scheme"]) c.grid.scheme = detail::parse_scheme(g["scheme"].as<std::string>());
    if (c.grid.half_width == 0.0) c.grid.half_width = p.half_width;

    detail::read(root, "seed", c.seed);
    detail::read(root, "threads", c.threads);
    if (c.threads < 1) throw ValidationError("threads must be at least 1");

    const YAML::Node is = root["isaacs"];
    detail::check_keys(is, "isaacs", {"samples", "tolerance"});
    detail::read(is, "samples", c.isaacs_samples);
    detail::read(is, "tolerance", c.isaacs_tolerance);

    const YAML::Node ce = root["counterexample"];
    detail::check_keys(ce, "counterexample", {"alpha", "a", "T", "paths", "batch_paths", "weak_points"});
    detail::read(ce, "alpha", c.ce_alpha);
    detail::read(ce, "a", c.ce_a);
    detail::read(ce, "T", c.ce_T);
    detail::read(ce, "paths", c.ce_paths);
    detail::read(ce, "batch_paths", c.ce_batch);
    detail::read(ce, "weak_points", c.ce_weak_points);

    const YAML::Node sd = root["saddle"];
    detail::check_keys(sd, "saddle", {"deviations"});
    detail::read(sd, "deviations", c.saddle_deviations);

    const YAML::Node dg = root["diagnose"];
    detail::check_keys(dg, "diagnose", {"probes", "trials", "paths"});
    detail::read(dg, "probes", c.diag_probes);
    detail::read(dg, "trials", c.diag_trials);
    detail::read(dg, "paths", c.diag_paths);

    const YAML::Node dc = root["dpp_check"];
    detail::check_keys(dc, "dpp_check", {"splits"});
    detail::read(dc, "splits", c.dpp_splits);
    for (double f : c.dpp_splits)
        if (!(f > 0.0 && f < 1.0)) throw ValidationError("dpp_check.splits must lie strictly inside (0, 1)");
    return c;
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root, const Overrides& overrides = {}) {
    try {
        return detail::parse_config_tree(root, overrides);
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
}

inline RunConfig load_config(const std::string& path, const Overrides& overrides = {}) {
    YAML::Node root;
    try {
        root = path.empty() ? YAML::Node() : YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw ValidationError("cannot read config '" + path + "': " + e.what());
    }
    return parse_config(root, overrides);
}

// Canonical form; parse_config(to_json(c)) reproduces c.
inline nlohmann::ordered_json to_json(const RunConfig& c, bool with_threads = true) {
    using J = nlohmann::ordered_json;
    const ScenarioParams& p = c.scenario;
    J s = {{"family", p.family}, {"dim", p.dim},         {"T", p.T},
           {"C0", p.C0},         {"L0", p.L0},           {"sigma", p.sigma},
           {"b", {p.b[0], p.b[1]}}, {"alpha", p.alpha},  {"a", p.a},
           {"u_points", p.u_points}, {"v_points", p.v_points}, {"payoff_scale", p.payoff_scale},
           {"terminal", {{"kind", p.terminal.kind}, {"c", p.terminal.c}, {"a", p.terminal.a}, {"cap", p.terminal.cap}}},
           {"driver", {{"kind", p.driver.kind}, {"c", p.driver.c}, {"y_coef", p.driver.y_coef}, {"z_coef", p.driver.z_coef}}},
           {"aug", to_string(p.aug)}, {"aug_points", p.aug_points}, {"half_width", p.half_width}};
    if (p.sigma_matrix) {
        const Mat& m = *p.sigma_matrix;
        s["sigma_matrix"] = p.dim == 2 ? J{{m[0][0], m[0][1]}, {m[1][0], m[1][1]}} : J{{m[0][0]}};
    }
    if (s["b"].size() == 2 && p.dim == 1 && p.b[1] == 0.0) s["b"] = J{p.b[0]};
    J j = {{"scenario", s},
           {"grid",
            {{"points", {c.grid.points[0], c.grid.points[1]}},
             {"n_t", c.grid.n_t},
             {"half_width", c.grid.half_width},
             {"aug_points", c.grid.aug_points},
             {"scheme", detail::scheme_name(c.grid.scheme)},
             {"allow_degenerate", c.grid.allow_degenerate}}},
           {"seed", c.seed}};
    if (with_threads) j["threads"] = c.threads;
    j["isaacs"] = {{"samples", c.isaacs_samples}, {"tolerance", c.isaacs_tolerance}};
    j["counterexample"] = {{"alpha", c.ce_alpha}, {"a", c.ce_a},           {"T", c.ce_T},
                           {"paths", c.ce_paths}, {"batch_paths", c.ce_batch}, {"weak_points", c.ce_weak_points}};
    j["saddle"] = {{"deviations", c.saddle_deviations}};
    j["diagnose"] = {{"probes", c.diag_probes}, {"trials", c.diag_trials}, {"paths", c.diag_paths}};
    j["dpp_check"] = {{"splits", c.dpp_splits}};
    return j;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// Thread count does not enter the hash: it never changes numeric output.
inline std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c, false).dump())));
    return buf;
}

}  // namespace sdg
