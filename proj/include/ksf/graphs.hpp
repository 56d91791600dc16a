// Incidence matrices, tree separators and orderings, the H_1 factorizations
// of a tree's reduced incidence matrix and its inverse, spanning trees and
// inverse-weight stretch.
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ksf/hmatrix.hpp"
#include "ksf/io.hpp"

namespace ksf {

inline constexpr Index kNoNode = std::numeric_limits<Index>::max();

class DisconnectedGraph : public Error {
public:
    using Error::Error;
};

struct IncidenceMatrix {
    ColMajorSparseMatrix matrix;  // n × m
    /// (source, target) per edge: −√w at the source, +√w at the target.
    std::vector<std::pair<Index, Index>> orientation;
};

/// Without a seed each edge points from its lower to its higher node id;
/// with a seed the direction of every edge is a fair coin flip.
IncidenceMatrix incidence(const WeightedGraph& g,
                          std::optional<std::uint64_t> orientation_seed = std::nullopt);

/// Deletes the grounded node's row.
ColMajorSparseMatrix reduce(const ColMajorSparseMatrix& b, Index grounded);

//
// separators
//

struct SeparatorSplit {
    std::optional<Index> separator;
    std::vector<Index> part1;  // sorted
    std::vector<Index> part2;  // sorted, holds the separator
};

/// Splits the forest induced by `subset` into two parts of at most ⌈2n/3⌉
/// nodes each. A connected piece (or a piece with one oversized component)
/// loses the lowest-index centroid of that component, which joins part 2; an
/// already balanced forest is split without a separator. Throws
/// InvalidArgument for fewer than two nodes or when the subset has a cycle.
SeparatorSplit tree_separator(const std::vector<std::vector<Index>>& adjacency,
                              std::span<const Index> subset);

struct SeparatorOrdering {
    /// order[pos] = node; covers every node except the root.
    std::vector<Index> order;
    /// position[node] = pos, kNoNode for the root.
    std::vector<Index> position;
    Dendrogram dendrogram;
};

/// Recursive two-way split of the non-root nodes of a rooted tree. Each
/// split keeps an ancestor-closed first part and moves whole subtrees hanging
/// below a single node into the second part, so the permuted reduced
/// incidence matrix is upper triangular and every off-diagonal block has
/// rank at most one with all its nonzeros in one row. Parts never exceed
/// ⌈2N/3⌉ nodes. Needs n >= 2.
SeparatorOrdering separator_ordering(std::span<const Index> parent, Index root);

//
// spanning trees
//

enum class TreeStrategy { MstInverseWeight, AkpwLike, Given };

std::string to_string(TreeStrategy s);

struct SpanningTree {
    Index root = 0;
    std::vector<Index> parent;          // kNoNode at the root
    std::vector<double> parent_weight;  // 0 at the root
    std::vector<Index> parent_edge;     // graph edge id, kNoNode at the root
    SeparatorOrdering ordering;
    std::string strategy;

    Index node_count() const noexcept { return parent.size(); }
    /// Graph edge ids of the tree, in ordering position order.
    std::vector<Index> tree_edges() const;

    nlohmann::json to_json() const;
};

/// Roots the tree formed by `edge_ids` at `root` (the lowest-index centroid
/// when absent) and computes the separator ordering. Throws InvalidArgument
/// unless the edges form a spanning tree.
SpanningTree make_spanning_tree(const WeightedGraph& g, std::span<const Index> edge_ids,
                                std::optional<Index> root, std::string strategy);

/// Lowest-index node whose removal leaves components of at most n/2 nodes.
Index tree_centroid(const WeightedGraph& g, std::span<const Index> edge_ids);

/// Maximum-weight spanning tree, i.e. minimum Σ 1/w_e (Kruskal, ties by
/// edge id).
std::vector<Index> mst_inverse_weight_edges(const WeightedGraph& g);

/// Cluster-merging heuristic: edges are bucketed into classes of length
/// 1/w within factors of two, shortest first; within each class the current
/// clusters are merged by breadth-first growth from the lowest-id cluster,
/// which keeps cluster diameters small.
std::vector<Index> akpw_like_edges(const WeightedGraph& g);

/// Matches each (u, v) of `tree` to an unused graph edge with those
/// endpoints.
std::vector<Index> given_tree_edges(const WeightedGraph& g, const std::vector<WeightedEdge>& tree);

/// Throws DisconnectedGraph for a disconnected graph.
SpanningTree spanning_tree(const WeightedGraph& g, TreeStrategy strategy,
                           std::optional<Index> root = std::nullopt,
                           const std::vector<WeightedEdge>* given = nullptr);

//
// tree incidence factorizations
//

/// Reduced incidence matrix of the tree in ordering positions: column pos(v)
/// has +√w_v at row pos(v) and −√w_v at row pos(parent(v)) when the parent
/// is not the root.
ColMajorSparseMatrix tree_incidence(const SpanningTree& tree);

struct TreeFactorizations {
    HMatrix e;
    HMatrix einv;
    KSparseFactorization e_factorization;
    KSparseFactorization einv_factorization;
    std::uint64_t build_work = 0;
};

TreeFactorizations tree_E_factorizations(const SpanningTree& tree);

/// Σ over non-tree edges (u, v, w) of w · Σ_{e on the tree path} 1/w_e.
double stretch(const WeightedGraph& g, const SpanningTree& tree);

}  // namespace ksf
