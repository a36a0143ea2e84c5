#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "scot/errors.hpp"

namespace scot {

/// Directed acyclic graph given as per-node ordered parent lists.
struct dag_spec {
    std::size_t node_count = 0;
    std::vector<std::vector<std::size_t>> parent_sets;  // parent_sets[i] = Pa(i)

    std::size_t size() const { return node_count; }
};

namespace detail {

inline std::string format_cycle(const std::vector<std::size_t>& cycle) {
    std::string s;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
        if (k) s += " -> ";
        s += std::to_string(cycle[k]);
    }
    return s;
}

// Walks parent edges from a node left unprocessed by Kahn's algorithm until a
// node repeats; the repeated segment is a cycle.
inline std::vector<std::size_t> find_cycle(const dag_spec& dag,
                                           const std::vector<bool>& placed) {
    const std::size_t n = dag.node_count;
    std::size_t start = 0;
    while (start < n && placed[start]) ++start;
    std::vector<int> seen(n, -1);
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (seen[cur] < 0) {
        seen[cur] = static_cast<int>(path.size());
        path.push_back(cur);
        // follow any unplaced parent; one exists while we stay inside the cycle set
        for (std::size_t p : dag.parent_sets[cur]) {
            if (!placed[p]) {
                cur = p;
                break;
            }
        }
    }
    std::vector<std::size_t> cycle(path.begin() + seen[cur], path.end());
    cycle.push_back(cur);
    std::reverse(cycle.begin(), cycle.end());
    return cycle;
}

}  // namespace detail

/// Returns a topological order placing every node after all of its parents.
/// Ties are broken by node index, so an edge-free graph yields 0,1,...,n-1.
/// Throws cycle_detected (listing one offending cycle) if none exists,
/// and error on out-of-range or self-referencing parent indices.
inline std::vector<std::size_t> validate_dag(const dag_spec& dag) {
    const std::size_t n = dag.node_count;
    if (dag.parent_sets.size() != n)
        throw error("dag_spec: parent_sets size " + std::to_string(dag.parent_sets.size()) +
                    " != node_count " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p : dag.parent_sets[i]) {
            if (p >= n)
                throw error("dag_spec: node " + std::to_string(i) + " has parent " +
                            std::to_string(p) + " out of range");
            if (p == i)
                throw error("dag_spec: node " + std::to_string(i) + " lists itself as parent");
        }
    }

    std::vector<std::size_t> remaining(n);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = dag.parent_sets[i].size();
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p : dag.parent_sets[i]) children[p].push_back(i);

    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> placed(n, false);

    // Kahn's algorithm with an index-ordered frontier.
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i)
        if (remaining[i] == 0) frontier.push_back(i);
    while (!frontier.empty()) {
        auto it = std::min_element(frontier.begin(), frontier.end());
        std::size_t v = *it;
        frontier.erase(it);
        placed[v] = true;
        order.push_back(v);
        for (std::size_t c : children[v])
            if (--remaining[c] == 0) frontier.push_back(c);
    }

    if (order.size() != n)
        throw cycle_detected("dag_spec: cycle " +
                             detail::format_cycle(detail::find_cycle(dag, placed)));
    return order;
}

}  // namespace scot
