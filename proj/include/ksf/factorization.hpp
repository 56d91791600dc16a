// k-sparse factorizations Q = CD and the Gram-split data that makes each
// projection step cost O(k).
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ksf/core.hpp"

namespace ksf {

class InvalidFactorization : public Error {
public:
    using Error::Error;
};

/// FO(c_i) = { j >= i : supp(c_j) ∩ supp(c_i) != ∅ }, each list sorted.
/// Throws InvalidFactorization on a zero column.
std::vector<std::vector<Index>> forward_overlaps(const ColMajorSparseMatrix& c);

/// max_j |∪_{i ∈ supp(d_j)} FO(c_i)|, the tight sparsity index of Q = CD.
std::size_t sparsity_index(const ColMajorSparseMatrix& c, const ColMajorSparseMatrix& d);

/// Same, reusing precomputed forward overlaps.
std::size_t sparsity_index(const std::vector<std::vector<Index>>& overlaps,
                           const ColMajorSparseMatrix& d);

/// Upper-triangular U with CᵀC = Uᵀ + U and diag(U) = ½ diag(CᵀC).
/// Returned as Uᵀ in column-major form, so column i holds row i of U.
ColMajorSparseMatrix build_gram_split(const ColMajorSparseMatrix& c);

struct PrecomputedColumns {
    std::vector<SparseVector> e_cols;   // e_j = Uᵀ d_j
    std::vector<double> col_sq_norms;   // 2 d_j·e_j = ‖q_j‖²
};

/// Throws InvalidFactorization when a squared norm is not positive (zero
/// column of Q).
PrecomputedColumns precompute_columns(const ColMajorSparseMatrix& d,
                                      const ColMajorSparseMatrix& u_transpose);

/// Drops C-column / D-row pairs whose D row is zero (or whose C column is
/// zero). C·D is unchanged and no forward overlap grows.
void prune_zero_factors(ColMajorSparseMatrix& c, ColMajorSparseMatrix& d);

class KSparseFactorization {
public:
    struct Options {
        /// Prepend I_m to C (and zero rows to D) so that any x0 is C·h0 with
        /// h0 = (x0, 0). Raises the certified index by at most one.
        bool augment_identity = false;
    };

    static KSparseFactorization build(ColMajorSparseMatrix c, ColMajorSparseMatrix d,
                                      Options options);
    static KSparseFactorization build(ColMajorSparseMatrix c, ColMajorSparseMatrix d) {
        return build(std::move(c), std::move(d), Options{});
    }

    /// Assembles a factorization from stored parts without any checking.
    /// Pair it with validate(); used by import and by tests of validate.
    static KSparseFactorization from_parts(ColMajorSparseMatrix c, ColMajorSparseMatrix d,
                                           ColMajorSparseMatrix u_transpose,
                                           std::vector<SparseVector> e_cols,
                                           std::vector<double> col_sq_norms, std::size_t k,
                                           Index identity_prefix);

    Index m() const noexcept { return c_.rows(); }
    Index n() const noexcept { return d_.cols(); }
    Index p() const noexcept { return c_.cols(); }
    std::size_t k() const noexcept { return k_; }

    const ColMajorSparseMatrix& c() const noexcept { return c_; }
    const ColMajorSparseMatrix& d() const noexcept { return d_; }
    const ColMajorSparseMatrix& u_transpose() const noexcept { return ut_; }
    ColMajorSparseMatrix u() const { return ut_.transpose(); }
    const std::vector<SparseVector>& e_cols() const noexcept { return e_cols_; }
    const std::vector<double>& col_sq_norms() const noexcept { return norms_; }
    double frobenius_sq() const noexcept;

    /// Number of leading C columns equal to e_0..e_{m-1}; either 0 or m.
    /// When m, D rows in that block may be zero.
    Index identity_prefix() const noexcept { return identity_prefix_; }
    bool has_identity_prefix() const noexcept { return identity_prefix_ > 0; }

    /// Multiply-adds spent building U, e_j and the norms.
    std::uint64_t setup_work() const noexcept { return setup_work_; }

    /// Dense Q = C·D, column by column.
    ColMajorSparseMatrix product() const { return c_.multiply(d_); }

    KSparseFactorization with_identity_augmentation() const;

private:
    KSparseFactorization() = default;

    ColMajorSparseMatrix c_;
    ColMajorSparseMatrix d_;
    ColMajorSparseMatrix ut_;
    std::vector<SparseVector> e_cols_;
    std::vector<double> norms_;
    std::size_t k_ = 0;
    Index identity_prefix_ = 0;
    std::uint64_t setup_work_ = 0;
};

struct ValidationReport {
    bool passed = true;
    std::string first_violation;
    double max_product_error = 0.0;

    void fail(std::string message) {
        if (passed) {
            passed = false;
            first_violation = std::move(message);
        }
    }
};

/// Checks ‖C·D − Q‖_max <= tol·max(1, ‖Q‖_max) plus every structural
/// invariant of the factorization. Never throws on a violation.
ValidationReport validate(const KSparseFactorization& f, const ColMajorSparseMatrix& q,
                          double tol = 1e-10);

//
// composition (elementary properties)
//

/// [Q1; Q2] = blockdiag(C1, C2)·[D1; D2]; index <= k1 + k2.
KSparseFactorization stack(const KSparseFactorization& top, const KSparseFactorization& bottom);

/// Q·F = C·(D·F); index <= k·f for f-column-sparse F.
KSparseFactorization right_multiply(const KSparseFactorization& f, const ColMajorSparseMatrix& rhs);

/// Q = I·Q; index = max column support of Q.
KSparseFactorization trivial_left(const ColMajorSparseMatrix& q);

/// Q = Q·I; index = max forward overlap among the columns of Q.
KSparseFactorization trivial_right(const ColMajorSparseMatrix& q);

//
// export / import: C.mtx, D.mtx, U.mtx and factorization.json
//

void export_factorization(const KSparseFactorization& f, const std::filesystem::path& dir);
KSparseFactorization import_factorization(const std::filesystem::path& dir);

}  // namespace ksf
