#pragma once

#include <vector>

namespace ppmc {

struct SccDecomposition {
    /// component id per node; ids are in reverse topological order of the
    /// condensation (a component only depends on components with smaller id
    /// when edges point from user to dependency).
    std::vector<int> component;
    int count = 0;
    std::vector<std::vector<int>> members; // component id -> nodes
};

/// Tarjan. Edges adj[v] = nodes v points to. Components are emitted
/// dependencies-first (every edge u->w has component[u] >= component[w]).
SccDecomposition tarjan_scc(const std::vector<std::vector<int>>& adj);

} // namespace ppmc
