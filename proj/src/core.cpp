#include "ksf/core.hpp"

#include <algorithm>
#include <cmath>

namespace ksf {

namespace work {
namespace {
thread_local std::uint64_t counter = 0;
}

void add(std::uint64_t n) noexcept { counter += n; }
std::uint64_t count() noexcept { return counter; }
void reset() noexcept { counter = 0; }
}  // namespace work

//
// SparseVector
//

SparseVector::SparseVector(Index dim, std::vector<Entry> entries) : dim_(dim) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.index < b.index; });
    entries_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.index >= dim)
            throw DimensionError("sparse vector index " + std::to_string(e.index) +
                                 " out of range for dimension " + std::to_string(dim));
        if (i > 0 && entries[i - 1].index == e.index)
            throw InvalidArgument("duplicate sparse vector index " + std::to_string(e.index));
        if (e.value != 0.0)
            entries_.push_back(e);
    }
}

SparseVector SparseVector::unit(Index dim, Index i, double value) {
    return SparseVector(dim, {{i, value}});
}

SparseVector SparseVector::from_dense(std::span<const double> values) {
    SparseVector v(values.size());
    for (Index i = 0; i < values.size(); ++i)
        if (values[i] != 0.0)
            v.entries_.push_back({i, values[i]});
    return v;
}

std::vector<Index> SparseVector::support() const {
    std::vector<Index> s;
    s.reserve(entries_.size());
    for (const auto& e : entries_)
        s.push_back(e.index);
    return s;
}

double SparseVector::at(Index i) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), i,
                               [](const Entry& e, Index idx) { return e.index < idx; });
    return (it != entries_.end() && it->index == i) ? it->value : 0.0;
}

DenseVector SparseVector::to_dense() const {
    DenseVector x(dim_, 0.0);
    for (const auto& e : entries_)
        x[e.index] = e.value;
    return x;
}

SparseVector SparseVector::scaled(double alpha) const {
    std::vector<Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_)
        out.push_back({e.index, alpha * e.value});
    return SparseVector(dim_, std::move(out));
}

double sparse_dense_dot(const SparseVector& v, std::span<const double> x) {
    if (v.dim() != x.size())
        throw DimensionError("sparse_dense_dot: dimension " + std::to_string(v.dim()) + " vs " +
                             std::to_string(x.size()));
    double s = 0.0;
    for (const auto& e : v)
        s += e.value * x[e.index];
    work::add(v.nnz());
    return s;
}

double sparse_sparse_dot(const SparseVector& a, const SparseVector& b) {
    if (a.dim() != b.dim())
        throw DimensionError("sparse_sparse_dot: dimension mismatch");
    double s = 0.0;
    std::uint64_t ops = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->index < ib->index) {
            ++ia;
        } else if (ib->index < ia->index) {
            ++ib;
        } else {
            s += ia->value * ib->value;
            ++ops;
            ++ia;
            ++ib;
        }
    }
    work::add(ops);
    return s;
}

void axpy(double alpha, const SparseVector& v, std::span<double> y) {
    if (v.dim() != y.size())
        throw DimensionError("axpy: dimension mismatch");
    for (const auto& e : v)
        y[e.index] += alpha * e.value;
    work::add(v.nnz());
}

//
// ColMajorSparseMatrix
//

ColMajorSparseMatrix::ColMajorSparseMatrix(Index rows, Index cols)
    : rows_(rows), columns_(cols, SparseVector(rows)) {}

ColMajorSparseMatrix::ColMajorSparseMatrix(Index rows, std::vector<SparseVector> columns)
    : rows_(rows), columns_(std::move(columns)) {
    for (const auto& c : columns_)
        if (c.dim() != rows_)
            throw DimensionError("column dimension " + std::to_string(c.dim()) +
                                 " does not match row count " + std::to_string(rows_));
}

ColMajorSparseMatrix ColMajorSparseMatrix::identity(Index n) {
    std::vector<SparseVector> cols;
    cols.reserve(n);
    for (Index i = 0; i < n; ++i)
        cols.push_back(SparseVector::unit(n, i));
    return {n, std::move(cols)};
}

ColMajorSparseMatrix ColMajorSparseMatrix::from_dense(const Eigen::MatrixXd& dense) {
    std::vector<SparseVector> cols;
    cols.reserve(static_cast<std::size_t>(dense.cols()));
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
        Eigen::VectorXd c = dense.col(j);
        cols.push_back(SparseVector::from_dense({c.data(), static_cast<std::size_t>(c.size())}));
    }
    return {static_cast<Index>(dense.rows()), std::move(cols)};
}

ColMajorSparseMatrix ColMajorSparseMatrix::from_triplets(Index rows, Index cols,
                                                         const std::vector<Triplet>& triplets) {
    std::vector<std::vector<Entry>> buckets(cols);
    for (const auto& t : triplets) {
        if (t.row >= rows || t.col >= cols)
            throw DimensionError("triplet (" + std::to_string(t.row) + ", " +
                                 std::to_string(t.col) + ") out of range");
        buckets[t.col].push_back({t.row, t.value});
    }
    std::vector<SparseVector> columns;
    columns.reserve(cols);
    for (auto& b : buckets)
        columns.emplace_back(rows, std::move(b));
    return {rows, std::move(columns)};
}

std::size_t ColMajorSparseMatrix::nnz() const noexcept {
    std::size_t n = 0;
    for (const auto& c : columns_)
        n += c.nnz();
    return n;
}

void ColMajorSparseMatrix::set_column(Index j, SparseVector v) {
    if (v.dim() != rows_)
        throw DimensionError("set_column: dimension mismatch");
    columns_.at(j) = std::move(v);
}

ColMajorSparseMatrix ColMajorSparseMatrix::transpose() const {
    std::vector<std::vector<Entry>> rows(rows_);
    for (Index j = 0; j < columns_.size(); ++j)
        for (const auto& e : columns_[j])
            rows[e.index].push_back({j, e.value});
    std::vector<SparseVector> out;
    out.reserve(rows_);
    for (auto& r : rows)
        out.emplace_back(columns_.size(), std::move(r));
    return {columns_.size(), std::move(out)};
}

std::size_t ColMajorSparseMatrix::max_column_support() const noexcept {
    std::size_t k = 0;
    for (const auto& c : columns_)
        k = std::max(k, c.nnz());
    return k;
}

std::size_t ColMajorSparseMatrix::max_row_support() const {
    std::vector<std::size_t> counts(rows_, 0);
    for (const auto& c : columns_)
        for (const auto& e : c)
            ++counts[e.index];
    return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

DenseVector ColMajorSparseMatrix::multiply(std::span<const double> x) const {
    if (x.size() != cols())
        throw DimensionError("multiply: dimension mismatch");
    DenseVector y(rows_, 0.0);
    for (Index j = 0; j < cols(); ++j)
        if (x[j] != 0.0)
            axpy(x[j], columns_[j], y);
    return y;
}

DenseVector ColMajorSparseMatrix::multiply_transpose(std::span<const double> x) const {
    if (x.size() != rows_)
        throw DimensionError("multiply_transpose: dimension mismatch");
    DenseVector y(cols(), 0.0);
    for (Index j = 0; j < cols(); ++j)
        y[j] = sparse_dense_dot(columns_[j], x);
    return y;
}

SparseVector ColMajorSparseMatrix::multiply(const SparseVector& v) const {
    if (v.dim() != cols())
        throw DimensionError("multiply: dimension mismatch");
    // scatter-gather accumulation over touched rows
    std::vector<double> acc(rows_, 0.0);
    std::vector<char> seen(rows_, 0);
    std::vector<Index> touched;
    for (const auto& e : v) {
        for (const auto& c : columns_[e.index]) {
            if (!seen[c.index]) {
                seen[c.index] = 1;
                touched.push_back(c.index);
            }
            acc[c.index] += e.value * c.value;
        }
        work::add(columns_[e.index].nnz());
    }
    std::vector<Entry> out;
    out.reserve(touched.size());
    for (Index i : touched)
        out.push_back({i, acc[i]});
    return SparseVector(rows_, std::move(out));
}

ColMajorSparseMatrix ColMajorSparseMatrix::multiply(const ColMajorSparseMatrix& other) const {
    if (other.rows() != cols())
        throw DimensionError("matrix product: inner dimensions " + std::to_string(cols()) +
                             " and " + std::to_string(other.rows()));
    std::vector<SparseVector> out;
    out.reserve(other.cols());
    for (const auto& c : other.columns())
        out.push_back(multiply(c));
    return {rows_, std::move(out)};
}

double ColMajorSparseMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (const auto& c : columns_)
        for (const auto& e : c)
            m = std::max(m, std::abs(e.value));
    return m;
}

Eigen::MatrixXd ColMajorSparseMatrix::to_dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_),
                                              static_cast<Eigen::Index>(cols()));
    for (Index j = 0; j < cols(); ++j)
        for (const auto& e : columns_[j])
            a(static_cast<Eigen::Index>(e.index), static_cast<Eigen::Index>(j)) = e.value;
    return a;
}

namespace {
SparseVector shifted(const SparseVector& v, Index offset, Index dim) {
    std::vector<Entry> out;
    out.reserve(v.nnz());
    for (const auto& e : v)
        out.push_back({e.index + offset, e.value});
    return SparseVector(dim, std::move(out));
}
}  // namespace

ColMajorSparseMatrix block_diagonal(const ColMajorSparseMatrix& a, const ColMajorSparseMatrix& b) {
    const Index rows = a.rows() + b.rows();
    std::vector<SparseVector> cols;
    cols.reserve(a.cols() + b.cols());
    for (const auto& c : a.columns())
        cols.push_back(shifted(c, 0, rows));
    for (const auto& c : b.columns())
        cols.push_back(shifted(c, a.rows(), rows));
    return {rows, std::move(cols)};
}

ColMajorSparseMatrix vstack(const ColMajorSparseMatrix& a, const ColMajorSparseMatrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("vstack: column counts differ");
    const Index rows = a.rows() + b.rows();
    std::vector<SparseVector> cols;
    cols.reserve(a.cols());
    for (Index j = 0; j < a.cols(); ++j) {
        std::vector<Entry> e(a.column(j).begin(), a.column(j).end());
        for (const auto& x : b.column(j))
            e.push_back({x.index + a.rows(), x.value});
        cols.emplace_back(rows, std::move(e));
    }
    return {rows, std::move(cols)};
}

ColMajorSparseMatrix hstack(const ColMajorSparseMatrix& a, const ColMajorSparseMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("hstack: row counts differ");
    std::vector<SparseVector> cols(a.columns());
    cols.insert(cols.end(), b.columns().begin(), b.columns().end());
    return {a.rows(), std::move(cols)};
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return std::sqrt(s);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("max_abs_diff: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace ksf
