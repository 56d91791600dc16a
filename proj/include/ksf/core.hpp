// Sparse/dense vector and matrix types shared by every ksf module.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ksf {

using Index = std::size_t;
using DenseVector = std::vector<double>;

//
// errors
//

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

//
// work counter
//
// Counts scalar multiply-adds performed by the sparse kernels on the calling
// thread. Tests and reports read it; nothing else depends on it.
//
namespace work {

void add(std::uint64_t n) noexcept;
std::uint64_t count() noexcept;
void reset() noexcept;

/// Work performed on this thread since construction.
class Scope {
public:
    Scope() noexcept : start_(count()) {}
    std::uint64_t elapsed() const noexcept { return count() - start_; }

private:
    std::uint64_t start_;
};

}  // namespace work

struct Entry {
    Index index;
    double value;

    friend bool operator==(const Entry&, const Entry&) = default;
};

/// Sorted (index, value) storage. Indices strictly increase and exact zeros
/// are never stored.
class SparseVector {
public:
    SparseVector() = default;
    explicit SparseVector(Index dim) : dim_(dim) {}

    /// Entries may arrive in any order; zeros are dropped. Throws on a
    /// duplicate or out-of-range index.
    SparseVector(Index dim, std::vector<Entry> entries);

    static SparseVector unit(Index dim, Index i, double value = 1.0);
    static SparseVector from_dense(std::span<const double> values);

    Index dim() const noexcept { return dim_; }
    std::size_t nnz() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    std::vector<Index> support() const;

    /// Value at i (binary search); 0 when i is not stored.
    double at(Index i) const;

    DenseVector to_dense() const;
    SparseVector scaled(double alpha) const;

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
    Index dim_ = 0;
    std::vector<Entry> entries_;
};

/// Σ a·x[i] over the stored entries. Counts |supp(v)| multiply-adds.
double sparse_dense_dot(const SparseVector& v, std::span<const double> x);

/// Sorted-merge dot product of two sparse vectors.
double sparse_sparse_dot(const SparseVector& a, const SparseVector& b);

/// y += alpha·v. Counts |supp(v)| multiply-adds.
void axpy(double alpha, const SparseVector& v, std::span<double> y);

/// Column-major sparse matrix: one SparseVector per column.
class ColMajorSparseMatrix {
public:
    ColMajorSparseMatrix() = default;
    ColMajorSparseMatrix(Index rows, Index cols);
    ColMajorSparseMatrix(Index rows, std::vector<SparseVector> columns);

    static ColMajorSparseMatrix identity(Index n);
    static ColMajorSparseMatrix from_dense(const Eigen::MatrixXd& dense);

    /// Triplets may be unordered; duplicates throw.
    struct Triplet {
        Index row;
        Index col;
        double value;
    };
    static ColMajorSparseMatrix from_triplets(Index rows, Index cols,
                                              const std::vector<Triplet>& triplets);

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return columns_.size(); }
    std::size_t nnz() const noexcept;

    const SparseVector& column(Index j) const { return columns_.at(j); }
    const std::vector<SparseVector>& columns() const noexcept { return columns_; }
    void set_column(Index j, SparseVector v);

    ColMajorSparseMatrix transpose() const;

    std::size_t max_column_support() const noexcept;
    std::size_t max_row_support() const;
    bool is_k_column_sparse(std::size_t k) const noexcept { return max_column_support() <= k; }
    bool is_k_row_sparse(std::size_t k) const { return max_row_support() <= k; }

    /// y = A·x for dense x.
    DenseVector multiply(std::span<const double> x) const;
    /// y = Aᵀ·x for dense x.
    DenseVector multiply_transpose(std::span<const double> x) const;
    /// A·v for a sparse v, accumulated densely then compressed.
    SparseVector multiply(const SparseVector& v) const;
    ColMajorSparseMatrix multiply(const ColMajorSparseMatrix& other) const;

    double max_abs() const noexcept;

    Eigen::MatrixXd to_dense() const;

    friend bool operator==(const ColMajorSparseMatrix&, const ColMajorSparseMatrix&) = default;

private:
    Index rows_ = 0;
    std::vector<SparseVector> columns_;
};

/// [A 0; 0 B]
ColMajorSparseMatrix block_diagonal(const ColMajorSparseMatrix& a, const ColMajorSparseMatrix& b);
/// [A; B] with equal column counts.
ColMajorSparseMatrix vstack(const ColMajorSparseMatrix& a, const ColMajorSparseMatrix& b);
/// [A B] with equal row counts.
ColMajorSparseMatrix hstack(const ColMajorSparseMatrix& a, const ColMajorSparseMatrix& b);

double norm2(std::span<const double> x);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace ksf
