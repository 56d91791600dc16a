// Dendrograms, H_r(P) matrices with dense low-rank off-diagonal blocks, and
// their recursive k-sparse factorization.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ksf/factorization.hpp"

namespace ksf {

/// Hierarchical partition of [0, n) into nested contiguous intervals.
/// Node 0 is the root; leaves are singletons.
class Dendrogram {
public:
    struct Node {
        Index begin;
        Index end;
        std::vector<Index> children;

        Index size() const noexcept { return end - begin; }
        bool leaf() const noexcept { return children.empty(); }
    };

    Dendrogram() = default;
    /// Validates the interval structure; throws InvalidArgument otherwise.
    explicit Dendrogram(std::vector<Node> nodes);

    Index size() const noexcept { return nodes_.empty() ? 0 : nodes_[0].size(); }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(Index i) const { return nodes_.at(i); }
    const Node& root() const { return nodes_.at(0); }

    std::size_t height() const noexcept { return height_; }
    std::size_t max_degree() const noexcept { return max_degree_; }

    /// The sub-dendrogram rooted at `node`, re-indexed to start at 0.
    Dendrogram subtree(Index node) const;

    nlohmann::json to_json() const;
    static Dendrogram from_json(const nlohmann::json& j);

private:
    std::vector<Node> nodes_;
    std::size_t height_ = 0;
    std::size_t max_degree_ = 0;
};

/// Near-even recursive split into at most `degree` contiguous children; the
/// remainder goes to the trailing children.
Dendrogram build_dendrogram_balanced(Index n, std::size_t degree);

/// Off-diagonal elementary block E_{I_row × I_col} = left · right.
struct LowRankBlock {
    Index row_child;  // position among the parent's children
    Index col_child;
    Eigen::MatrixXd left;   // |I_row| × r_ij
    Eigen::MatrixXd right;  // r_ij × |I_col|

    Index rank() const noexcept { return static_cast<Index>(left.cols()); }
};

class HMatrix {
public:
    /// Per dendrogram node: the off-diagonal blocks between its children, or
    /// the scalar diagonal entry for a leaf.
    struct NodeBlocks {
        std::vector<LowRankBlock> blocks;
        double diagonal = 0.0;
    };

    HMatrix(Dendrogram dendrogram, std::vector<NodeBlocks> blocks, std::size_t rank_bound);

    const Dendrogram& dendrogram() const noexcept { return dendrogram_; }
    const std::vector<NodeBlocks>& blocks() const noexcept { return blocks_; }
    std::size_t rank_bound() const noexcept { return rank_; }
    Index size() const noexcept { return dendrogram_.size(); }

    /// Largest stored block rank.
    std::size_t max_stored_rank() const noexcept;

    Eigen::MatrixXd densify() const;

    /// The diagonal block E_{I×I} at a dendrogram node, as an H-matrix.
    HMatrix diagonal_block(Index node) const;

    /// rd(d−1)(h+1)
    std::size_t sparsity_bound() const noexcept;
    /// rd²n
    std::size_t column_bound() const noexcept;

    nlohmann::json to_json() const;
    static HMatrix from_json(const nlohmann::json& j);

private:
    Dendrogram dendrogram_;
    std::vector<NodeBlocks> blocks_;
    std::size_t rank_;
};

struct CompressionResult {
    HMatrix matrix;
    double max_block_error;
};

/// Replaces every off-diagonal elementary block by its truncated SVD of rank
/// at most r. Singular values at or below `tol`·‖block‖₂ are dropped.
CompressionResult compress_dense(const Eigen::MatrixXd& a, const Dendrogram& dendrogram,
                                 std::size_t rank, double tol = 1e-12);

/// Recursive C/D assembly: each node contributes its children's C blocks
/// followed by the off-diagonal left factors of that block row.
KSparseFactorization factorize_hmatrix(const HMatrix& h,
                                       KSparseFactorization::Options options = {});

/// Raw C and D of the recursive assembly, before any factorization checks.
std::pair<ColMajorSparseMatrix, ColMajorSparseMatrix> assemble_hmatrix_factors(const HMatrix& h);

class RankConditionViolation : public Error {
public:
    RankConditionViolation(const std::string& what, Index row, bool upper)
        : Error(what), row_(row), upper_(upper) {}

    /// 0-based i of the first failing condition.
    Index row() const noexcept { return row_; }
    bool upper() const noexcept { return upper_; }

private:
    Index row_;
    bool upper_;
};

/// Number of singular values strictly above `threshold`.
Index numerical_rank(const Eigen::MatrixXd& a, double threshold);

/// Checks the (p, q)-semiseparable rank conditions and converts to an
/// H_max(p,q) matrix over a binary halving dendrogram.
CompressionResult semiseparable_to_hmatrix(const Eigen::MatrixXd& a, std::size_t lower_rank,
                                           std::size_t upper_rank, double tol = 1e-9);

}  // namespace ksf
