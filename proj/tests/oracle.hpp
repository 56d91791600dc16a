// Dense reference computations used as independent oracles by the tests.
#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "ksf/core.hpp"
#include "ksf/hmatrix.hpp"
#include "ksf/io.hpp"

namespace oracle {

using ksf::Index;

inline Eigen::VectorXd to_eigen(const std::vector<double>& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& x) {
    return std::vector<double>(x.data(), x.data() + x.size());
}

inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a) {
    return a.completeOrthogonalDecomposition().pseudoInverse();
}

inline double sigma_min_sq(const Eigen::MatrixXd& a) {
    const auto s = Eigen::BDCSVD<Eigen::MatrixXd>(a).singularValues();
    return s(s.size() - 1) * s(s.size() - 1);
}

/// n × m, −√w at the lower endpoint and +√w at the higher one.
inline Eigen::MatrixXd incidence(const ksf::WeightedGraph& g) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.node_count()),
                                              static_cast<Eigen::Index>(g.edge_count()));
    for (Index j = 0; j < g.edge_count(); ++j) {
        const auto& e = g.edge(j);
        const double s = std::sqrt(e.weight);
        b(static_cast<Eigen::Index>(std::min(e.u, e.v)), static_cast<Eigen::Index>(j)) = -s;
        b(static_cast<Eigen::Index>(std::max(e.u, e.v)), static_cast<Eigen::Index>(j)) = s;
    }
    return b;
}

inline Eigen::MatrixXd laplacian(const ksf::WeightedGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) {
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        l(u, u) += e.weight;
        l(v, v) += e.weight;
        l(u, v) -= e.weight;
        l(v, u) -= e.weight;
    }
    return l;
}

inline Eigen::Index dense_rank(const Eigen::MatrixXd& a, double tol = 1e-10) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(tol);
    return lu.rank();
}

/// FO by pairwise support intersection.
inline std::vector<std::set<Index>> forward_overlaps(const ksf::ColMajorSparseMatrix& c) {
    std::vector<std::set<Index>> out(c.cols());
    for (Index i = 0; i < c.cols(); ++i) {
        const auto si = c.column(i).support();
        for (Index j = i; j < c.cols(); ++j) {
            const auto sj = c.column(j).support();
            std::vector<Index> common;
            std::set_intersection(si.begin(), si.end(), sj.begin(), sj.end(),
                                  std::back_inserter(common));
            if (!common.empty())
                out[i].insert(j);
        }
    }
    return out;
}

/// The definition of the sparsity index, by explicit set unions.
inline std::size_t sparsity_index(const ksf::ColMajorSparseMatrix& c,
                                  const ksf::ColMajorSparseMatrix& d) {
    const auto fo = oracle::forward_overlaps(c);
    std::size_t k = 0;
    for (const auto& col : d.columns()) {
        std::set<Index> u;
        for (const auto& e : col)
            u.insert(fo[e.index].begin(), fo[e.index].end());
        k = std::max(k, u.size());
    }
    return k;
}

/// Random sparse matrix with `per_col` nonzeros per column (at most rows).
inline ksf::ColMajorSparseMatrix random_sparse(Index rows, Index cols, Index per_col,
                                               std::mt19937_64& rng) {
    std::vector<ksf::SparseVector> out;
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (Index j = 0; j < cols; ++j) {
        std::vector<Index> idx(rows);
        for (Index i = 0; i < rows; ++i)
            idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<ksf::Entry> entries;
        for (Index t = 0; t < std::min(per_col, rows); ++t) {
            double v = val(rng);
            if (v == 0.0)
                v = 0.5;
            entries.push_back({idx[t], v});
        }
        out.emplace_back(rows, std::move(entries));
    }
    return ksf::ColMajorSparseMatrix(rows, std::move(out));
}

struct HInstance {
    ksf::HMatrix matrix;
    Eigen::MatrixXd dense;  // assembled block by block, independently of densify()
};

/// Random dendrogram of the given degree (children sizes drawn at random) and
/// random rank-r blocks on every off-diagonal elementary block.
inline HInstance random_hmatrix(Index n, std::size_t degree, std::size_t rank,
                                std::mt19937_64& rng) {
    std::vector<ksf::Dendrogram::Node> nodes;
    std::function<Index(Index, Index)> split = [&](Index b, Index e) -> Index {
        const Index slot = nodes.size();
        nodes.push_back({b, e, {}});
        const Index size = e - b;
        if (size == 1)
            return slot;
        const Index parts = std::min<Index>(degree, size);
        // random cut points
        std::vector<Index> cuts;
        std::vector<Index> all(size - 1);
        for (Index i = 0; i < all.size(); ++i)
            all[i] = b + 1 + i;
        std::shuffle(all.begin(), all.end(), rng);
        cuts.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(parts - 1));
        std::sort(cuts.begin(), cuts.end());
        cuts.push_back(e);
        std::vector<Index> kids;
        Index cursor = b;
        for (Index c : cuts) {
            kids.push_back(split(cursor, c));
            cursor = c;
        }
        nodes[slot].children = kids;
        return slot;
    };
    split(0, n);
    ksf::Dendrogram dendro(nodes);

    std::normal_distribution<double> normal;
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
    std::vector<ksf::HMatrix::NodeBlocks> recs(dendro.nodes().size());
    for (Index id = 0; id < dendro.nodes().size(); ++id) {
        const auto& node = dendro.node(id);
        if (node.leaf()) {
            recs[id].diagonal = normal(rng) + 3.0;
            dense(static_cast<Eigen::Index>(node.begin), static_cast<Eigen::Index>(node.begin)) =
                recs[id].diagonal;
            continue;
        }
        for (Index a = 0; a < node.children.size(); ++a)
            for (Index b = 0; b < node.children.size(); ++b) {
                if (a == b)
                    continue;
                const auto& rows = dendro.node(node.children[a]);
                const auto& cols = dendro.node(node.children[b]);
                const auto r = static_cast<Eigen::Index>(rank);
                Eigen::MatrixXd left(static_cast<Eigen::Index>(rows.size()), r);
                Eigen::MatrixXd right(r, static_cast<Eigen::Index>(cols.size()));
                for (Eigen::Index i = 0; i < left.size(); ++i)
                    left.data()[i] = normal(rng);
                for (Eigen::Index i = 0; i < right.size(); ++i)
                    right.data()[i] = normal(rng);
                for (Index i = 0; i < rows.size(); ++i)
                    for (Index j = 0; j < cols.size(); ++j) {
                        double s = 0.0;
                        for (Eigen::Index t = 0; t < r; ++t)
                            s += left(static_cast<Eigen::Index>(i), t) *
                                 right(t, static_cast<Eigen::Index>(j));
                        dense(static_cast<Eigen::Index>(rows.begin + i),
                              static_cast<Eigen::Index>(cols.begin + j)) = s;
                    }
                recs[id].blocks.push_back({a, b, std::move(left), std::move(right)});
            }
    }
    return {ksf::HMatrix(std::move(dendro), std::move(recs), rank), std::move(dense)};
}

/// Random diagonally dominant tridiagonal matrix.
inline Eigen::MatrixXd random_tridiagonal(Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> off(-1.0, 1.0);
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (i + 1 < m) {
            t(i, i + 1) = off(rng);
            t(i + 1, i) = off(rng);
        }
    }
    for (Eigen::Index i = 0; i < m; ++i)
        t(i, i) = t.row(i).cwiseAbs().sum() + 1.0 + std::abs(off(rng));
    return t;
}

}  // namespace oracle
