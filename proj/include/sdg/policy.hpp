#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/model.hpp"

namespace sdg {

// Feedback map (time slice, node) -> index into a ControlSet. Slice k holds
// the control applied on [t_k, t_{k+1}).
struct Policy {
    std::string control_set;
    long n_t = 0;
    std::size_t nodes = 0;
    std::vector<std::uint16_t> index;

    Policy() = default;
    Policy(std::string set_id, long steps, std::size_t node_count, std::uint16_t fill = 0)
        : control_set(std::move(set_id)),
          n_t(steps),
          nodes(node_count),
          index(static_cast<std::size_t>(steps) * node_count, fill) {}

    std::uint16_t at(long k, std::size_t node) const { return index[static_cast<std::size_t>(k) * nodes + node]; }
    std::uint16_t& at(long k, std::size_t node) { return index[static_cast<std::size_t>(k) * nodes + node]; }

    bool total_on(const Grid& g) const { return n_t == g.n_t && nodes == g.node_count(); }

    // Every entry must name a member of the declared set.
    void validate(const ControlSet& set) const {
        if (set.id() != control_set) throw ValidationError("policy draws from " + control_set + ", not " + set.id());
        for (auto i : index)
            if (i >= set.size()) throw ValidationError("policy entry outside control set " + set.id());
    }

    friend bool operator==(const Policy&, const Policy&) = default;
};

// Uniform node-wise random feedback policy.
inline Policy random_policy(const ControlSet& set, const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(set.size()) - 1);
    Policy p(set.id(), g.n_t, g.node_count());
    for (auto& i : p.index) i = static_cast<std::uint16_t>(pick(rng));
    return p;
}

}  // namespace sdg
