#include "ksf/hmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace ksf {

//
// Dendrogram
//

Dendrogram::Dendrogram(std::vector<Node> nodes) {
    if (nodes.empty())
        throw InvalidArgument("dendrogram needs a root node");
    if (nodes[0].begin != 0 || nodes[0].end <= nodes[0].begin)
        throw InvalidArgument("dendrogram root must be a non-empty interval starting at 0");

    // re-index into preorder so every subtree is a contiguous node range
    std::vector<char> visited(nodes.size(), 0);
    std::vector<Node> ordered;
    ordered.reserve(nodes.size());
    std::function<Index(Index, std::size_t)> visit = [&](Index id, std::size_t depth) -> Index {
        if (id >= nodes.size() || visited[id])
            throw InvalidArgument("dendrogram node list is not a tree");
        visited[id] = 1;
        const Node& src = nodes[id];
        if (src.end <= src.begin)
            throw InvalidArgument("empty dendrogram interval");
        const Index slot = ordered.size();
        ordered.push_back({src.begin, src.end, {}});
        height_ = std::max(height_, depth);
        if (src.children.empty()) {
            if (src.size() != 1)
                throw InvalidArgument("dendrogram leaf [" + std::to_string(src.begin) + ", " +
                                      std::to_string(src.end) + ") is not a singleton");
            return slot;
        }
        if (src.children.size() < 2)
            throw InvalidArgument("non-leaf dendrogram node needs at least two children");
        max_degree_ = std::max(max_degree_, src.children.size());
        Index cursor = src.begin;
        std::vector<Index> kids;
        for (Index c : src.children) {
            if (c >= nodes.size())
                throw InvalidArgument("dendrogram child index out of range");
            if (nodes[c].begin != cursor)
                throw InvalidArgument("dendrogram children must be contiguous and ordered");
            cursor = nodes[c].end;
            kids.push_back(visit(c, depth + 1));
        }
        if (cursor != src.end)
            throw InvalidArgument("dendrogram children do not cover their parent");
        ordered[slot].children = std::move(kids);
        return slot;
    };
    visit(0, 0);
    if (ordered.size() != nodes.size())
        throw InvalidArgument("dendrogram has unreachable nodes");
    nodes_ = std::move(ordered);
}

Dendrogram Dendrogram::subtree(Index node) const {
    const Index offset = node;
    const Index shift = nodes_.at(node).begin;
    // preorder: the subtree occupies [node, last] where last is found by walking
    // down the rightmost children
    Index last = node;
    while (!nodes_[last].children.empty())
        last = nodes_[last].children.back();
    std::vector<Node> out;
    out.reserve(last - node + 1);
    for (Index i = node; i <= last; ++i) {
        Node copy{nodes_[i].begin - shift, nodes_[i].end - shift, {}};
        for (Index c : nodes_[i].children)
            copy.children.push_back(c - offset);
        out.push_back(std::move(copy));
    }
    return Dendrogram(std::move(out));
}

nlohmann::json Dendrogram::to_json() const {
    std::function<nlohmann::json(Index)> rec = [&](Index i) {
        nlohmann::json kids = nlohmann::json::array();
        for (Index c : nodes_[i].children)
            kids.push_back(rec(c));
        return nlohmann::json{{"interval", {nodes_[i].begin, nodes_[i].end}}, {"children", kids}};
    };
    return rec(0);
}

Dendrogram Dendrogram::from_json(const nlohmann::json& j) {
    std::vector<Node> nodes;
    std::function<Index(const nlohmann::json&)> rec = [&](const nlohmann::json& jn) -> Index {
        const auto& iv = jn.at("interval");
        const Index slot = nodes.size();
        nodes.push_back({iv.at(0).get<Index>(), iv.at(1).get<Index>(), {}});
        std::vector<Index> kids;
        if (jn.contains("children"))
            for (const auto& c : jn.at("children"))
                kids.push_back(rec(c));
        nodes[slot].children = std::move(kids);
        return slot;
    };
    rec(j);
    return Dendrogram(std::move(nodes));
}

Dendrogram build_dendrogram_balanced(Index n, std::size_t degree) {
    if (n == 0)
        throw InvalidArgument("dendrogram of an empty set");
    if (degree < 2)
        throw InvalidArgument("dendrogram degree must be at least 2");
    std::vector<Dendrogram::Node> nodes;
    std::function<Index(Index, Index)> split = [&](Index b, Index e) -> Index {
        const Index slot = nodes.size();
        nodes.push_back({b, e, {}});
        const Index size = e - b;
        if (size == 1)
            return slot;
        const Index parts = std::min<Index>(degree, size);
        const Index base = size / parts;
        const Index rem = size % parts;
        std::vector<Index> kids;
        Index cursor = b;
        for (Index i = 0; i < parts; ++i) {
            const Index len = base + (i >= parts - rem ? 1 : 0);
            kids.push_back(split(cursor, cursor + len));
            cursor += len;
        }
        nodes[slot].children = std::move(kids);
        return slot;
    };
    split(0, n);
    return Dendrogram(std::move(nodes));
}

//
// HMatrix
//

HMatrix::HMatrix(Dendrogram dendrogram, std::vector<NodeBlocks> blocks, std::size_t rank_bound)
    : dendrogram_(std::move(dendrogram)), blocks_(std::move(blocks)), rank_(rank_bound) {
    const auto& nodes = dendrogram_.nodes();
    if (blocks_.size() != nodes.size())
        throw InvalidArgument("HMatrix needs one block record per dendrogram node");
    for (Index i = 0; i < nodes.size(); ++i) {
        const auto& node = nodes[i];
        auto& rec = blocks_[i];
        if (node.leaf()) {
            if (!rec.blocks.empty())
                throw InvalidArgument("leaf node carries off-diagonal blocks");
            continue;
        }
        std::sort(rec.blocks.begin(), rec.blocks.end(), [](const auto& a, const auto& b) {
            return std::tie(a.row_child, a.col_child) < std::tie(b.row_child, b.col_child);
        });
        for (Index b = 0; b < rec.blocks.size(); ++b) {
            const auto& blk = rec.blocks[b];
            if (blk.row_child >= node.children.size() || blk.col_child >= node.children.size() ||
                blk.row_child == blk.col_child)
                throw InvalidArgument("invalid off-diagonal block position");
            if (b > 0 && rec.blocks[b - 1].row_child == blk.row_child &&
                rec.blocks[b - 1].col_child == blk.col_child)
                throw InvalidArgument("duplicate off-diagonal block");
            const auto& rows = nodes[node.children[blk.row_child]];
            const auto& cols = nodes[node.children[blk.col_child]];
            if (static_cast<Index>(blk.left.rows()) != rows.size() ||
                static_cast<Index>(blk.right.cols()) != cols.size() ||
                blk.left.cols() != blk.right.rows())
                throw DimensionError("low-rank factor shapes do not match the block");
            if (blk.rank() > rank_)
                throw InvalidArgument("block rank " + std::to_string(blk.rank()) +
                                      " exceeds the declared bound " + std::to_string(rank_));
        }
    }
}

std::size_t HMatrix::max_stored_rank() const noexcept {
    std::size_t r = 0;
    for (const auto& rec : blocks_)
        for (const auto& b : rec.blocks)
            r = std::max<std::size_t>(r, b.rank());
    return r;
}

Eigen::MatrixXd HMatrix::densify() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const auto& nodes = dendrogram_.nodes();
    for (Index i = 0; i < nodes.size(); ++i) {
        const auto& node = nodes[i];
        if (node.leaf()) {
            const auto b = static_cast<Eigen::Index>(node.begin);
            a(b, b) = blocks_[i].diagonal;
            continue;
        }
        for (const auto& blk : blocks_[i].blocks) {
            const auto& rows = nodes[node.children[blk.row_child]];
            const auto& cols = nodes[node.children[blk.col_child]];
            a.block(static_cast<Eigen::Index>(rows.begin), static_cast<Eigen::Index>(cols.begin),
                    static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size())) = blk.left * blk.right;
        }
    }
    return a;
}

HMatrix HMatrix::diagonal_block(Index node) const {
    auto sub = dendrogram_.subtree(node);
    std::vector<NodeBlocks> recs(blocks_.begin() + static_cast<std::ptrdiff_t>(node),
                                 blocks_.begin() +
                                     static_cast<std::ptrdiff_t>(node + sub.nodes().size()));
    return HMatrix(std::move(sub), std::move(recs), rank_);
}

std::size_t HMatrix::sparsity_bound() const noexcept {
    const std::size_t r = std::max<std::size_t>(rank_, 1);
    const std::size_t d = std::max<std::size_t>(dendrogram_.max_degree(), 2);
    return r * d * (d - 1) * (dendrogram_.height() + 1);
}

std::size_t HMatrix::column_bound() const noexcept {
    const std::size_t r = std::max<std::size_t>(rank_, 1);
    const std::size_t d = std::max<std::size_t>(dendrogram_.max_degree(), 2);
    return r * d * d * size();
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    if (static_cast<Eigen::Index>(j.size()) != rows)
        throw DimensionError("factor array has the wrong number of rows");
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw DimensionError("factor array has the wrong number of columns");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

}  // namespace

nlohmann::json HMatrix::to_json() const {
    const auto& nodes = dendrogram_.nodes();
    std::function<nlohmann::json(Index)> rec = [&](Index i) {
        const auto& node = nodes[i];
        nlohmann::json jn = {{"interval", {node.begin, node.end}}};
        if (node.leaf()) {
            jn["diagonal"] = blocks_[i].diagonal;
            return jn;
        }
        nlohmann::json kids = nlohmann::json::array();
        for (Index c : node.children)
            kids.push_back(rec(c));
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : blocks_[i].blocks)
            blocks.push_back({{"row", b.row_child},
                              {"col", b.col_child},
                              {"rank", b.rank()},
                              {"left", matrix_to_json(b.left)},
                              {"right", matrix_to_json(b.right)}});
        jn["children"] = std::move(kids);
        jn["blocks"] = std::move(blocks);
        return jn;
    };
    return {{"format", "hmatrix"}, {"schema", 1}, {"n", size()}, {"rank", rank_}, {"tree", rec(0)}};
}

HMatrix HMatrix::from_json(const nlohmann::json& j) {
    const auto rank = j.at("rank").get<std::size_t>();
    std::vector<Dendrogram::Node> nodes;
    std::vector<NodeBlocks> recs;
    std::function<Index(const nlohmann::json&)> rec = [&](const nlohmann::json& jn) -> Index {
        const auto& iv = jn.at("interval");
        const Index slot = nodes.size();
        nodes.push_back({iv.at(0).get<Index>(), iv.at(1).get<Index>(), {}});
        recs.emplace_back();
        if (!jn.contains("children")) {
            recs[slot].diagonal = jn.at("diagonal").get<double>();
            return slot;
        }
        std::vector<Index> kids;
        std::vector<Index> sizes;
        for (const auto& c : jn.at("children")) {
            const auto& civ = c.at("interval");
            sizes.push_back(civ.at(1).get<Index>() - civ.at(0).get<Index>());
            kids.push_back(rec(c));
        }
        nodes[slot].children = kids;
        if (jn.contains("blocks")) {
            for (const auto& b : jn.at("blocks")) {
                LowRankBlock blk;
                blk.row_child = b.at("row").get<Index>();
                blk.col_child = b.at("col").get<Index>();
                if (blk.row_child >= sizes.size() || blk.col_child >= sizes.size())
                    throw InvalidArgument("block child position out of range");
                const auto r = static_cast<Eigen::Index>(b.at("rank").get<Index>());
                blk.left = matrix_from_json(b.at("left"),
                                            static_cast<Eigen::Index>(sizes[blk.row_child]), r);
                blk.right = matrix_from_json(b.at("right"), r,
                                             static_cast<Eigen::Index>(sizes[blk.col_child]));
                recs[slot].blocks.push_back(std::move(blk));
            }
        }
        return slot;
    };
    rec(j.at("tree"));
    Dendrogram dendro(nodes);
    // the dendrogram constructor preserves preorder, which is how `rec` numbered the nodes
    return HMatrix(std::move(dendro), std::move(recs), rank);
}

//
// compression
//

CompressionResult compress_dense(const Eigen::MatrixXd& a, const Dendrogram& dendrogram,
                                 std::size_t rank, double tol) {
    const auto n = static_cast<Eigen::Index>(dendrogram.size());
    if (a.rows() != n || a.cols() != n)
        throw DimensionError("compress_dense: matrix does not match the dendrogram size");
    const auto& nodes = dendrogram.nodes();
    std::vector<HMatrix::NodeBlocks> recs(nodes.size());
    double max_err = 0.0;
    for (Index i = 0; i < nodes.size(); ++i) {
        const auto& node = nodes[i];
        if (node.leaf()) {
            const auto b = static_cast<Eigen::Index>(node.begin);
            recs[i].diagonal = a(b, b);
            continue;
        }
        for (Index rc = 0; rc < node.children.size(); ++rc) {
            for (Index cc = 0; cc < node.children.size(); ++cc) {
                if (rc == cc)
                    continue;
                const auto& rows = nodes[node.children[rc]];
                const auto& cols = nodes[node.children[cc]];
                const Eigen::MatrixXd block =
                    a.block(static_cast<Eigen::Index>(rows.begin),
                            static_cast<Eigen::Index>(cols.begin),
                            static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(cols.size()));
                if (block.cwiseAbs().maxCoeff() == 0.0)
                    continue;
                Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const auto& s = svd.singularValues();
                const double cutoff = tol * s(0);
                Eigen::Index keep = 0;
                while (keep < s.size() && keep < static_cast<Eigen::Index>(rank) &&
                       s(keep) > cutoff)
                    ++keep;
                LowRankBlock blk;
                blk.row_child = rc;
                blk.col_child = cc;
                blk.left = svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal();
                blk.right = svd.matrixV().leftCols(keep).transpose();
                max_err = std::max(max_err, (block - blk.left * blk.right).cwiseAbs().maxCoeff());
                if (keep > 0)
                    recs[i].blocks.push_back(std::move(blk));
            }
        }
    }
    return {HMatrix(dendrogram, std::move(recs), rank), max_err};
}

//
// factorization
//

std::pair<ColMajorSparseMatrix, ColMajorSparseMatrix> assemble_hmatrix_factors(const HMatrix& h) {
    const Index n = h.size();
    const auto& nodes = h.dendrogram().nodes();
    const auto& recs = h.blocks();
    std::vector<SparseVector> c_cols;
    std::vector<std::vector<Entry>> d_cols(n);  // D built column by column

    std::function<void(Index)> assemble = [&](Index id) {
        const auto& node = nodes[id];
        if (node.leaf()) {
            const double value = recs[id].diagonal;
            // a zero scalar contributes no column at all
            if (value != 0.0) {
                d_cols[node.begin].push_back({c_cols.size(), 1.0});
                c_cols.push_back(SparseVector::unit(n, node.begin, value));
            }
            return;
        }
        const auto& blocks = recs[id].blocks;  // sorted by (row_child, col_child)
        for (Index rc = 0; rc < node.children.size(); ++rc) {
            assemble(node.children[rc]);
            const auto& rows = nodes[node.children[rc]];
            for (const auto& blk : blocks) {
                if (blk.row_child != rc)
                    continue;
                const auto& cols = nodes[node.children[blk.col_child]];
                for (Eigen::Index r = 0; r < blk.left.cols(); ++r) {
                    std::vector<Entry> ce;
                    for (Eigen::Index i = 0; i < blk.left.rows(); ++i)
                        ce.push_back({rows.begin + static_cast<Index>(i), blk.left(i, r)});
                    SparseVector col(n, std::move(ce));
                    if (col.empty())
                        continue;
                    const Index slot = c_cols.size();
                    bool any = false;
                    for (Eigen::Index j = 0; j < blk.right.cols(); ++j) {
                        const double v = blk.right(r, j);
                        if (v != 0.0) {
                            d_cols[cols.begin + static_cast<Index>(j)].push_back({slot, v});
                            any = true;
                        }
                    }
                    if (any)
                        c_cols.push_back(std::move(col));
                }
            }
        }
    };
    assemble(0);

    const Index p = c_cols.size();
    std::vector<SparseVector> dcols;
    dcols.reserve(n);
    for (auto& col : d_cols)
        dcols.emplace_back(p, std::move(col));
    return {ColMajorSparseMatrix(n, std::move(c_cols)), ColMajorSparseMatrix(p, std::move(dcols))};
}

KSparseFactorization factorize_hmatrix(const HMatrix& h, KSparseFactorization::Options options) {
    auto [c, d] = assemble_hmatrix_factors(h);
    return KSparseFactorization::build(std::move(c), std::move(d), options);
}

//
// semiseparable conversion
//

Index numerical_rank(const Eigen::MatrixXd& a, double threshold) {
    if (a.size() == 0)
        return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > threshold)
            ++r;
    return r;
}

CompressionResult semiseparable_to_hmatrix(const Eigen::MatrixXd& a, std::size_t lower_rank,
                                           std::size_t upper_rank, double tol) {
    if (a.rows() != a.cols() || a.rows() == 0)
        throw DimensionError("semiseparable_to_hmatrix needs a non-empty square matrix");
    if (lower_rank == 0 || upper_rank == 0)
        throw InvalidArgument("semiseparable ranks must be at least 1");
    const Eigen::Index n = a.rows();
    const double norm = Eigen::BDCSVD<Eigen::MatrixXd>(a).singularValues()(0);
    const double threshold = tol * norm;
    const auto p = static_cast<Eigen::Index>(lower_rank);
    const auto q = static_cast<Eigen::Index>(upper_rank);
    for (Eigen::Index i = 0; i < n; ++i) {
        // rank(A(1 : i+q-1, i : n)) <= q, 1-based
        const Eigen::Index upper_rows = std::min(n, i + q);
        const Eigen::MatrixXd upper = a.block(0, i, upper_rows, n - i);
        if (numerical_rank(upper, threshold) > upper_rank)
            throw RankConditionViolation(
                "upper rank condition fails at i = " + std::to_string(i + 1) + ": rank of A(1:" +
                    std::to_string(upper_rows) + ", " + std::to_string(i + 1) + ":" +
                    std::to_string(n) + ") exceeds " + std::to_string(upper_rank),
                static_cast<Index>(i), true);
        // rank(A(i : n, 1 : i+p-1)) <= p
        const Eigen::Index lower_cols = std::min(n, i + p);
        const Eigen::MatrixXd lower = a.block(i, 0, n - i, lower_cols);
        if (numerical_rank(lower, threshold) > lower_rank)
            throw RankConditionViolation(
                "lower rank condition fails at i = " + std::to_string(i + 1) + ": rank of A(" +
                    std::to_string(i + 1) + ":" + std::to_string(n) + ", 1:" +
                    std::to_string(lower_cols) + ") exceeds " + std::to_string(lower_rank),
                static_cast<Index>(i), false);
    }
    const auto dendro = build_dendrogram_balanced(static_cast<Index>(n), 2);
    auto result = compress_dense(a, dendro, std::max(lower_rank, upper_rank));
    if (result.max_block_error > 10.0 * threshold)
        throw RankConditionViolation("elementary block does not compress at rank " +
                                         std::to_string(std::max(lower_rank, upper_rank)),
                                     0, true);
    return result;
}

}  // namespace ksf
