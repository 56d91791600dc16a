#include "ksf/generators.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace ksf {

namespace {

double draw(std::mt19937_64& rng, WeightRange w) {
    if (w.lo == w.hi)
        return w.lo;
    return std::uniform_real_distribution<double>(w.lo, w.hi)(rng);
}

}  // namespace

WeightedGraph path_graph(Index n, WeightRange w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<WeightedEdge> edges;
    for (Index i = 1; i < n; ++i)
        edges.push_back({i - 1, i, draw(rng, w)});
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph grid_graph(Index rows, Index cols, WeightRange w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<WeightedEdge> edges;
    auto id = [cols](Index r, Index c) { return r * cols + c; };
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) {
            if (c + 1 < cols)
                edges.push_back({id(r, c), id(r, c + 1), draw(rng, w)});
            if (r + 1 < rows)
                edges.push_back({id(r, c), id(r + 1, c), draw(rng, w)});
        }
    return WeightedGraph(rows * cols, std::move(edges));
}

namespace {

std::vector<WeightedEdge> random_tree_edges(Index n, std::mt19937_64& rng, WeightRange w) {
    std::vector<Index> label(n);
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    std::vector<WeightedEdge> edges;
    for (Index i = 1; i < n; ++i) {
        const Index parent = std::uniform_int_distribution<Index>(0, i - 1)(rng);
        edges.push_back({label[parent], label[i], draw(rng, w)});
    }
    return edges;
}

}  // namespace

WeightedGraph random_tree(Index n, std::uint64_t seed, WeightRange w) {
    std::mt19937_64 rng(seed);
    return WeightedGraph(n, random_tree_edges(n, rng, w));
}

WeightedGraph random_connected_graph(Index n, Index m, std::uint64_t seed, WeightRange w) {
    std::mt19937_64 rng(seed);
    auto edges = random_tree_edges(n, rng, w);
    std::set<std::pair<Index, Index>> used;
    for (const auto& e : edges)
        used.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
    const Index max_edges = n * (n - 1) / 2;
    const Index want = std::min(m, max_edges);
    std::uniform_int_distribution<Index> node(0, n - 1);
    while (edges.size() < want) {
        const Index a = node(rng);
        const Index b = node(rng);
        if (a == b || !used.insert({std::min(a, b), std::max(a, b)}).second)
            continue;
        edges.push_back({a, b, draw(rng, w)});
    }
    return WeightedGraph(n, std::move(edges));
}

}  // namespace ksf
