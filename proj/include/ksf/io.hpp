// File ingestion: Matrix Market coordinate files and weighted edge lists.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ksf/core.hpp"

namespace ksf {

struct WeightedEdge {
    Index u;
    Index v;
    double weight;
};

/// Undirected graph with strictly positive weights. Parallel edges allowed,
/// self-loops rejected.
class WeightedGraph {
public:
    WeightedGraph() = default;
    WeightedGraph(Index nodes, std::vector<WeightedEdge> edges);

    Index node_count() const noexcept { return n_; }
    Index edge_count() const noexcept { return edges_.size(); }
    const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }
    const WeightedEdge& edge(Index i) const { return edges_.at(i); }

    bool connected() const noexcept { return connected_; }

    /// Per-node list of incident edge ids.
    std::vector<std::vector<Index>> adjacency() const;

private:
    Index n_ = 0;
    std::vector<WeightedEdge> edges_;
    bool connected_ = false;
};

/// Reads "%%MatrixMarket matrix coordinate real general" (1-based indices).
/// Duplicate coordinates are an error; explicit zeros are dropped.
ColMajorSparseMatrix read_matrix_market(std::istream& in);
ColMajorSparseMatrix read_matrix_market(const std::filesystem::path& path);

/// Writes values with 17 significant digits so a read reproduces them exactly.
void write_matrix_market(std::ostream& out, const ColMajorSparseMatrix& a);
void write_matrix_market(const std::filesystem::path& path, const ColMajorSparseMatrix& a);

/// One-column Matrix Market convenience wrappers.
DenseVector read_vector_market(const std::filesystem::path& path);
void write_vector_market(const std::filesystem::path& path, std::span<const double> x);

/// "u v w" per line, 1-based node ids, '#' comments. The node count is the
/// largest id seen unless `min_nodes` is larger.
WeightedGraph read_edge_list(std::istream& in, Index min_nodes = 0);
WeightedGraph read_edge_list(const std::filesystem::path& path, Index min_nodes = 0);
void write_edge_list(std::ostream& out, const WeightedGraph& g);

/// Writes to a sibling temporary file then renames, so a failure never leaves
/// a partial file at `path`.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace ksf
