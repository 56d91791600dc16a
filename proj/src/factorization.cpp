#include "ksf/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ksf/io.hpp"

namespace ksf {

namespace {

struct RowEntry {
    Index col;
    double value;
};

// Row-wise view of C: for each row, the columns touching it, ascending.
std::vector<std::vector<RowEntry>> row_lists(const ColMajorSparseMatrix& c) {
    std::vector<std::vector<RowEntry>> rows(c.rows());
    for (Index j = 0; j < c.cols(); ++j)
        for (const auto& e : c.column(j))
            rows[e.index].push_back({j, e.value});
    return rows;
}

void require_nonzero_columns(const ColMajorSparseMatrix& c) {
    for (Index i = 0; i < c.cols(); ++i)
        if (c.column(i).empty())
            throw InvalidFactorization("zero column " + std::to_string(i) + " of C");
}

std::vector<std::size_t> row_counts(const ColMajorSparseMatrix& d) {
    std::vector<std::size_t> counts(d.rows(), 0);
    for (const auto& col : d.columns())
        for (const auto& e : col)
            ++counts[e.index];
    return counts;
}

bool is_identity_prefix(const ColMajorSparseMatrix& c) {
    const Index m = c.rows();
    if (m == 0 || c.cols() < m)
        return false;
    for (Index i = 0; i < m; ++i) {
        const auto& col = c.column(i);
        if (col.nnz() != 1 || col.entries()[0].index != i || col.entries()[0].value != 1.0)
            return false;
    }
    return true;
}

}  // namespace

std::vector<std::vector<Index>> forward_overlaps(const ColMajorSparseMatrix& c) {
    require_nonzero_columns(c);
    const auto rows = row_lists(c);
    std::vector<std::vector<Index>> fo(c.cols());
    std::vector<Index> stamp(c.cols(), static_cast<Index>(-1));
    for (Index i = 0; i < c.cols(); ++i) {
        auto& out = fo[i];
        for (const auto& e : c.column(i)) {
            const auto& row = rows[e.index];
            auto it = std::lower_bound(row.begin(), row.end(), i,
                                       [](const RowEntry& r, Index x) { return r.col < x; });
            for (; it != row.end(); ++it) {
                if (stamp[it->col] != i) {
                    stamp[it->col] = i;
                    out.push_back(it->col);
                }
            }
        }
        std::sort(out.begin(), out.end());
    }
    return fo;
}

std::size_t sparsity_index(const std::vector<std::vector<Index>>& overlaps,
                           const ColMajorSparseMatrix& d) {
    if (d.rows() != overlaps.size())
        throw DimensionError("sparsity_index: C has " + std::to_string(overlaps.size()) +
                             " columns but D has " + std::to_string(d.rows()) + " rows");
    std::vector<Index> stamp(overlaps.size(), static_cast<Index>(-1));
    std::size_t k = 0;
    for (Index j = 0; j < d.cols(); ++j) {
        std::size_t size = 0;
        for (const auto& e : d.column(j))
            for (Index c : overlaps[e.index])
                if (stamp[c] != j) {
                    stamp[c] = j;
                    ++size;
                }
        k = std::max(k, size);
    }
    return k;
}

std::size_t sparsity_index(const ColMajorSparseMatrix& c, const ColMajorSparseMatrix& d) {
    if (c.cols() != d.rows())
        throw DimensionError("sparsity_index: shape mismatch");
    const auto counts = row_counts(d);
    for (Index i = 0; i < counts.size(); ++i)
        if (counts[i] == 0)
            throw InvalidFactorization("zero row " + std::to_string(i) + " of D");
    return sparsity_index(forward_overlaps(c), d);
}

ColMajorSparseMatrix build_gram_split(const ColMajorSparseMatrix& c) {
    require_nonzero_columns(c);
    const Index p = c.cols();
    const auto rows = row_lists(c);
    std::vector<double> acc(p, 0.0);
    std::vector<Index> stamp(p, static_cast<Index>(-1));
    std::vector<Index> touched;
    std::vector<SparseVector> ut_cols;
    ut_cols.reserve(p);
    std::uint64_t ops = 0;
    for (Index a = 0; a < p; ++a) {
        touched.clear();
        for (const auto& e : c.column(a)) {
            const auto& row = rows[e.index];
            auto it = std::lower_bound(row.begin(), row.end(), a,
                                       [](const RowEntry& r, Index x) { return r.col < x; });
            for (; it != row.end(); ++it) {
                if (stamp[it->col] != a) {
                    stamp[it->col] = a;
                    acc[it->col] = 0.0;
                    touched.push_back(it->col);
                }
                acc[it->col] += e.value * it->value;
                ++ops;
            }
        }
        std::vector<Entry> entries;
        entries.reserve(touched.size());
        for (Index b : touched)
            entries.push_back({b, b == a ? 0.5 * acc[b] : acc[b]});
        ut_cols.emplace_back(p, std::move(entries));
    }
    work::add(ops);
    return {p, std::move(ut_cols)};
}

PrecomputedColumns precompute_columns(const ColMajorSparseMatrix& d,
                                      const ColMajorSparseMatrix& u_transpose) {
    if (u_transpose.cols() != d.rows())
        throw DimensionError("precompute_columns: U is " + std::to_string(u_transpose.cols()) +
                             " wide but D has " + std::to_string(d.rows()) + " rows");
    PrecomputedColumns out;
    out.e_cols.reserve(d.cols());
    out.col_sq_norms.reserve(d.cols());
    for (Index j = 0; j < d.cols(); ++j) {
        auto e = u_transpose.multiply(d.column(j));
        const double norm = 2.0 * sparse_sparse_dot(d.column(j), e);
        if (!(norm > 0.0))
            throw InvalidFactorization("column " + std::to_string(j) +
                                       " of Q has nonpositive squared norm (zero direction)");
        out.e_cols.push_back(std::move(e));
        out.col_sq_norms.push_back(norm);
    }
    return out;
}

void prune_zero_factors(ColMajorSparseMatrix& c, ColMajorSparseMatrix& d) {
    if (c.cols() != d.rows())
        throw DimensionError("prune_zero_factors: shape mismatch");
    const auto counts = row_counts(d);
    std::vector<Index> new_index(c.cols(), static_cast<Index>(-1));
    std::vector<SparseVector> kept;
    Index next = 0;
    for (Index i = 0; i < c.cols(); ++i) {
        if (counts[i] > 0 && !c.column(i).empty()) {
            new_index[i] = next++;
            kept.push_back(c.column(i));
        }
    }
    if (next == c.cols())
        return;
    std::vector<SparseVector> dcols;
    dcols.reserve(d.cols());
    for (const auto& col : d.columns()) {
        std::vector<Entry> entries;
        entries.reserve(col.nnz());
        for (const auto& e : col)
            if (new_index[e.index] != static_cast<Index>(-1))
                entries.push_back({new_index[e.index], e.value});
        dcols.emplace_back(next, std::move(entries));
    }
    c = ColMajorSparseMatrix(c.rows(), std::move(kept));
    d = ColMajorSparseMatrix(next, std::move(dcols));
}

//
// KSparseFactorization
//

KSparseFactorization KSparseFactorization::build(ColMajorSparseMatrix c, ColMajorSparseMatrix d,
                                                 Options options) {
    if (c.cols() != d.rows())
        throw DimensionError("factorization: C has " + std::to_string(c.cols()) +
                             " columns but D has " + std::to_string(d.rows()) + " rows");
    work::Scope scope;
    KSparseFactorization f;
    const Index m = c.rows();
    if (options.augment_identity && !is_identity_prefix(c)) {
        c = hstack(ColMajorSparseMatrix::identity(m), c);
        d = vstack(ColMajorSparseMatrix(m, d.cols()), d);
    }
    f.identity_prefix_ = is_identity_prefix(c) ? m : 0;

    require_nonzero_columns(c);
    const auto counts = row_counts(d);
    for (Index i = f.identity_prefix_; i < counts.size(); ++i)
        if (counts[i] == 0)
            throw InvalidFactorization("zero row " + std::to_string(i) + " of D");

    const auto fo = forward_overlaps(c);
    f.k_ = sparsity_index(fo, d);
    f.ut_ = build_gram_split(c);
    auto pre = precompute_columns(d, f.ut_);
    f.e_cols_ = std::move(pre.e_cols);
    f.norms_ = std::move(pre.col_sq_norms);
    f.c_ = std::move(c);
    f.d_ = std::move(d);
    f.setup_work_ = scope.elapsed();
    return f;
}

KSparseFactorization KSparseFactorization::from_parts(ColMajorSparseMatrix c,
                                                      ColMajorSparseMatrix d,
                                                      ColMajorSparseMatrix u_transpose,
                                                      std::vector<SparseVector> e_cols,
                                                      std::vector<double> col_sq_norms,
                                                      std::size_t k, Index identity_prefix) {
    KSparseFactorization f;
    f.c_ = std::move(c);
    f.d_ = std::move(d);
    f.ut_ = std::move(u_transpose);
    f.e_cols_ = std::move(e_cols);
    f.norms_ = std::move(col_sq_norms);
    f.k_ = k;
    f.identity_prefix_ = identity_prefix;
    return f;
}

double KSparseFactorization::frobenius_sq() const noexcept {
    double s = 0.0;
    for (double v : norms_)
        s += v;
    return s;
}

KSparseFactorization KSparseFactorization::with_identity_augmentation() const {
    if (has_identity_prefix())
        return *this;
    return build(c_, d_, Options{.augment_identity = true});
}

//
// validation
//

ValidationReport validate(const KSparseFactorization& f, const ColMajorSparseMatrix& q,
                          double tol) {
    ValidationReport report;
    const auto& c = f.c();
    const auto& d = f.d();
    if (c.cols() != d.rows() || c.rows() != q.rows() || d.cols() != q.cols()) {
        report.fail("shape mismatch between C·D and Q");
        return report;
    }

    for (Index i = 0; i < c.cols(); ++i)
        if (c.column(i).empty()) {
            report.fail("zero column " + std::to_string(i) + " of C");
            break;
        }
    const auto counts = row_counts(d);
    for (Index i = f.identity_prefix(); i < counts.size(); ++i)
        if (counts[i] == 0) {
            report.fail("zero row " + std::to_string(i) + " of D");
            break;
        }

    // C·D against Q
    const double scale = std::max(1.0, q.max_abs());
    for (Index j = 0; j < q.cols(); ++j) {
        const auto cd = c.multiply(d.column(j)).to_dense();
        const auto qj = q.column(j).to_dense();
        report.max_product_error = std::max(report.max_product_error, max_abs_diff(cd, qj));
    }
    if (report.max_product_error > tol * scale)
        report.fail("max |C·D - Q| = " + std::to_string(report.max_product_error) +
                    " exceeds tolerance");
    if (!report.passed)
        return report;

    // Gram split
    const auto& ut = f.u_transpose();
    if (ut.rows() != c.cols() || ut.cols() != c.cols()) {
        report.fail("U has wrong shape");
        return report;
    }
    for (Index i = 0; i < ut.cols(); ++i)
        for (const auto& e : ut.column(i))
            if (e.index < i) {
                report.fail("U is not upper triangular at (" + std::to_string(i) + ", " +
                            std::to_string(e.index) + ")");
                return report;
            }
    const auto gram = build_gram_split(c);
    const double gscale = std::max(1.0, gram.max_abs());
    for (Index i = 0; i < ut.cols(); ++i) {
        const auto expected = gram.column(i).to_dense();
        const auto stored = ut.column(i).to_dense();
        if (max_abs_diff(expected, stored) > tol * gscale) {
            report.fail("row " + std::to_string(i) + " of U does not split CᵀC");
            return report;
        }
    }

    // e_j and norms
    if (f.e_cols().size() != d.cols() || f.col_sq_norms().size() != d.cols()) {
        report.fail("precomputed columns missing");
        return report;
    }
    for (Index j = 0; j < d.cols(); ++j) {
        const auto e = ut.multiply(d.column(j));
        if (max_abs_diff(e.to_dense(), f.e_cols()[j].to_dense()) > tol * gscale) {
            report.fail("e_" + std::to_string(j) + " differs from Uᵀd_j");
            return report;
        }
        const double norm = 2.0 * sparse_sparse_dot(d.column(j), e);
        const double stored = f.col_sq_norms()[j];
        if (!(stored > 0.0) || std::abs(norm - stored) > tol * std::max(1.0, norm)) {
            report.fail("squared norm of column " + std::to_string(j) + " is inconsistent");
            return report;
        }
    }

    const auto k = sparsity_index(forward_overlaps(c), d);
    if (k != f.k())
        report.fail("declared k = " + std::to_string(f.k()) + " but sparsity index is " +
                    std::to_string(k));
    return report;
}

//
// composition
//

namespace {
KSparseFactorization build_pruned(ColMajorSparseMatrix c, ColMajorSparseMatrix d) {
    prune_zero_factors(c, d);
    return KSparseFactorization::build(std::move(c), std::move(d));
}
}  // namespace

KSparseFactorization stack(const KSparseFactorization& top, const KSparseFactorization& bottom) {
    if (top.n() != bottom.n())
        throw DimensionError("stack: column counts differ (" + std::to_string(top.n()) + " vs " +
                             std::to_string(bottom.n()) + ")");
    return build_pruned(block_diagonal(top.c(), bottom.c()), vstack(top.d(), bottom.d()));
}

KSparseFactorization right_multiply(const KSparseFactorization& f,
                                    const ColMajorSparseMatrix& rhs) {
    if (rhs.rows() != f.n())
        throw DimensionError("right_multiply: Q has " + std::to_string(f.n()) +
                             " columns but F has " + std::to_string(rhs.rows()) + " rows");
    return build_pruned(f.c(), f.d().multiply(rhs));
}

KSparseFactorization trivial_left(const ColMajorSparseMatrix& q) {
    return build_pruned(ColMajorSparseMatrix::identity(q.rows()), q);
}

KSparseFactorization trivial_right(const ColMajorSparseMatrix& q) {
    return build_pruned(q, ColMajorSparseMatrix::identity(q.cols()));
}

//
// export / import
//

void export_factorization(const KSparseFactorization& f, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_market(dir / "C.mtx", f.c());
    write_matrix_market(dir / "D.mtx", f.d());
    write_matrix_market(dir / "U.mtx", f.u());
    nlohmann::json meta = {{"k", f.k()},
                           {"m", f.m()},
                           {"n", f.n()},
                           {"p", f.p()},
                           {"identity_prefix", f.identity_prefix()}};
    write_file_atomically(dir / "factorization.json", meta.dump(2) + "\n");
}

KSparseFactorization import_factorization(const std::filesystem::path& dir) {
    std::ifstream in(dir / "factorization.json");
    if (!in)
        throw Error("cannot open " + (dir / "factorization.json").string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("factorization.json: ") + e.what(), 1);
    }
    auto c = read_matrix_market(dir / "C.mtx");
    auto d = read_matrix_market(dir / "D.mtx");
    auto u = read_matrix_market(dir / "U.mtx");
    if (meta.at("m").get<Index>() != c.rows() || meta.at("n").get<Index>() != d.cols() ||
        meta.at("p").get<Index>() != c.cols())
        throw InvalidFactorization("factorization.json shape does not match the stored matrices");
    auto ut = u.transpose();
    auto pre = precompute_columns(d, ut);
    auto f = KSparseFactorization::from_parts(std::move(c), std::move(d), std::move(ut),
                                              std::move(pre.e_cols), std::move(pre.col_sq_norms),
                                              meta.at("k").get<std::size_t>(),
                                              meta.value("identity_prefix", Index{0}));
    const auto report = validate(f, f.product());
    if (!report.passed)
        throw InvalidFactorization("imported factorization invalid: " + report.first_violation);
    return f;
}

}  // namespace ksf
