// End-to-end solvers: minimum-norm solutions of A = [E F] systems, square and
// overdetermined systems through the dual vector, and graph Laplacians.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ksf/engine.hpp"
#include "ksf/graphs.hpp"

namespace ksf {

class IncompatibleSystem : public Error {
public:
    using Error::Error;
};

/// A = [E F] with E square and invertible and E⁻¹ = C·D given as a
/// factorization.
struct SplitSystem {
    ColMajorSparseMatrix e;
    ColMajorSparseMatrix f;
    KSparseFactorization einv;
    double einv_f_frob_sq = 0.0;  // ‖E⁻¹F‖²_F
    double kappa = 0.0;           // m + ‖E⁻¹F‖²_F

    Index rows() const noexcept { return e.rows(); }
    Index cols() const noexcept { return e.cols() + f.cols(); }
    ColMajorSparseMatrix a() const { return hstack(e, f); }
    /// x0 = (E⁻¹b; 0)
    DenseVector initial_guess(std::span<const double> b) const;
};

SplitSystem make_split_system(ColMajorSparseMatrix e, ColMajorSparseMatrix f,
                              KSparseFactorization einv);

/// Reduced incidence matrix of a graph split along a spanning tree. Rows are
/// the non-root nodes in ordering positions; the first n−1 columns are the
/// tree edges (oriented parent to child), the rest the non-tree edges in id
/// order (oriented from the lower node id).
struct GraphSplit {
    SplitSystem system;
    SpanningTree tree;
    std::vector<Index> column_edge;  // graph edge id per column of A
    std::vector<std::pair<Index, Index>> column_orientation;  // (source, target) nodes
    double stretch = 0.0;
};

GraphSplit make_graph_split(const WeightedGraph& g, SpanningTree tree);

/// Q = [E⁻¹F; −I] = blockdiag(C, I)·[D·F; −I], with C-column / D-row pairs
/// that vanish in D·F dropped. Its columns span the null space of A.
KSparseFactorization build_nullspace_Q(const SplitSystem& split);

struct MinNormOptions {
    double eps = 1e-6;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> max_iters;
    double safety = 10.0;
    std::uint64_t trace_stride = 0;
    /// When present the run stops as soon as the relative error reaches eps.
    std::optional<DenseVector> x_star;
    /// Called at every traced checkpoint with the current iterate.
    std::function<void(std::uint64_t t, std::span<const double> x)> on_checkpoint;
};

struct MinNormResult {
    DenseVector x;
    SolveReport report;
};

/// ⌈κ · ln(ε0/ε)⌉ · safety with ε0 = 1 + √(n + ‖E⁻¹F‖²_F).
std::uint64_t min_norm_budget(const SplitSystem& split, double eps, double safety);

/// Throws IncompatibleSystem when ‖A·x0 − b‖ > 1e-8·‖b‖. Without an oracle
/// the run counts as converged once it has spent the budget at safety 2,
/// where the expected relative error bound drops below eps.
MinNormResult solve_min_norm(const SplitSystem& split, std::span<const double> b,
                             const MinNormOptions& options = {});

struct SquareOptions {
    double eps = 1e-6;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> max_iters;
    /// Lower bound on σ²_min(A); computed by dense SVD for small A when absent.
    std::optional<double> sigma_min_sq;
    double safety = 10.0;
    std::uint64_t trace_stride = 0;
};

struct SquareResult {
    DenseVector y;
    SolveReport report;
};

/// Iterates on x = A·y − b from y = 0 with the columns of A as directions.
/// Square systems stop once ‖A·y − b‖ ≤ eps·‖b‖ and report converged = false
/// when the budget runs out first; overdetermined systems run the full
/// budget and converge to the least-squares solution.
SquareResult solve_square(const KSparseFactorization& a, std::span<const double> b,
                          const SquareOptions& options = {});

struct LaplacianOptions {
    double eps = 1e-6;
    std::uint64_t seed = 0;
    TreeStrategy strategy = TreeStrategy::MstInverseWeight;
    const std::vector<WeightedEdge>* given_tree = nullptr;
    std::optional<Index> ground;
    std::optional<std::uint64_t> max_iters;
    double safety = 10.0;
    std::uint64_t trace_stride = 0;
    /// Any solution of Lχ = c; enables early stopping and the L-norm error.
    std::optional<DenseVector> chi_star;
    std::function<void(std::uint64_t t, std::span<const double> x, std::span<const double> chi)>
        on_checkpoint;
};

struct LaplacianResult {
    DenseVector chi;
    SolveReport report;
    std::optional<GraphSplit> split;  // absent for c = 0
};

/// χ from the tree part of x: χ_root = 0 and χ_v = χ_parent + x_v/√w_v.
DenseVector back_substitute(const SpanningTree& tree, std::span<const double> x_tree);

/// Solves Lχ = c for L = B·Bᵀ. Throws IncompatibleSystem when Σc ≠ 0 and
/// DisconnectedGraph for a disconnected graph.
LaplacianResult solve_laplacian(const WeightedGraph& g, std::span<const double> c,
                                const LaplacianOptions& options = {});

/// χᵀLχ = Σ_edges w (χ_u − χ_v)²
double l_quadratic_form(const WeightedGraph& g, std::span<const double> chi);
/// √(χᵀLχ)
double l_pseudo_norm(const WeightedGraph& g, std::span<const double> chi);

}  // namespace ksf
