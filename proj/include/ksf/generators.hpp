// Seeded instance families for tests and benchmarks.
#pragma once

#include <cstdint>

#include "ksf/io.hpp"

namespace ksf {

struct WeightRange {
    double lo = 1.0;
    double hi = 1.0;
};

WeightedGraph path_graph(Index n, WeightRange w = {}, std::uint64_t seed = 0);

/// rows × cols lattice, 4-neighbour edges.
WeightedGraph grid_graph(Index rows, Index cols, WeightRange w = {}, std::uint64_t seed = 0);

/// Random recursive tree (node i attaches to a uniform earlier node) with
/// shuffled labels.
WeightedGraph random_tree(Index n, std::uint64_t seed, WeightRange w = {});

/// Random tree plus m − n + 1 extra distinct non-tree edges (as many as fit).
WeightedGraph random_connected_graph(Index n, Index m, std::uint64_t seed, WeightRange w = {});

}  // namespace ksf
