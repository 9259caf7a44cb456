#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdg/dpp.hpp"
#include "sdg/errors.hpp"
#include "sdg/model.hpp"

namespace sdg::io {

namespace fs = std::filesystem;

// Shortest decimal text that reads back to the same double.
inline std::string num(double x) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

// One row per node of slice k: coordinates then one column per field.
inline std::string slice_csv(const Grid& g, long k, const std::vector<std::string>& names,
                             const std::vector<const ValueField*>& fields) {
    std::ostringstream os;
    os << "x0";
    if (g.dim == 2) os << ",x1";
    if (g.aug_kind != AugKind::none) os << ",aug";
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const State st = g.state(n);
        os << num(st.x[0]);
        if (g.dim == 2) os << ',' << num(st.x[1]);
        if (g.aug_kind != AugKind::none) os << ',' << num(st.aug);
        for (const ValueField* f : fields) os << ',' << num(f->value(k, n));
        os << '\n';
    }
    return os.str();
}

// Binary field cache: magic, format version, config hash, shape, then the
// raw value and gradient tables (little-endian doubles).
inline constexpr char kCacheMagic[4] = {'S', 'D', 'G', 'F'};
inline constexpr std::uint32_t kCacheVersion = 1;

inline void save_field(const fs::path& path, const ValueField& f, std::uint64_t hash) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    out.write(kCacheMagic, 4);
    put(kCacheVersion);
    put(hash);
    put(static_cast<std::uint32_t>(f.problem));
    put(static_cast<std::int32_t>(f.dim));
    put(static_cast<std::int64_t>(f.n_t));
    put(static_cast<std::uint64_t>(f.nodes));
    put(static_cast<std::uint64_t>(f.z_fallbacks));
    out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(f.z.data()), static_cast<std::streamsize>(f.z.size() * sizeof(double)));
    if (!out) throw Error("write failed: " + path.string());
}

// Returns nothing when the file is absent, foreign, or keyed by another hash.
inline std::optional<ValueField> load_field(const fs::path& path, std::uint64_t hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    auto get = [&](auto& v) { in.read(reinterpret_cast<char*>(&v), sizeof v); };
    char magic[4];
    in.read(magic, 4);
    std::uint32_t version = 0, problem = 0;
    std::uint64_t stored = 0, nodes = 0, fallbacks = 0;
    std::int32_t dim = 0;
    std::int64_t n_t = 0;
    get(version);
    get(stored);
    get(problem);
    get(dim);
    get(n_t);
    get(nodes);
    get(fallbacks);
    if (!in || std::memcmp(magic, kCacheMagic, 4) != 0 || version != kCacheVersion || stored != hash) return std::nullopt;
    if (dim < 1 || dim > kMaxDim || n_t < 1 || problem > 2) return std::nullopt;
    ValueField f;
    f.problem = static_cast<Problem>(problem);
    f.dim = dim;
    f.n_t = n_t;
    f.nodes = nodes;
    f.z_fallbacks = fallbacks;
    f.values.resize(static_cast<std::size_t>(n_t + 1) * nodes);
    f.z.resize(f.values.size() * static_cast<std::size_t>(dim));
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(f.z.data()), static_cast<std::streamsize>(f.z.size() * sizeof(double)));
    if (!in || in.peek() != std::char_traits<char>::eof()) return std::nullopt;
    return f;
}

}  // namespace sdg::io
