#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace obstacle_fem {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

class SparseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear solve failure; `residual` is the last relative residual reached.
class LinearSolveError : public SparseError {
public:
    LinearSolveError(const std::string& what, double residual) : SparseError(what), residual(residual) {}
    double residual;
};

/**
 * Compressed sparse row matrix. Column indices are strictly increasing within
 * each row and duplicates never appear. Immutable once built.
 */
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Sums duplicate (row, col) entries; the result does not depend on triplet order.
    static CsrMatrix from_triplets(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols);
    static CsrMatrix identity(std::size_t n);

    std::size_t rows() const { return nrows_; }
    std::size_t cols() const { return ncols_; }
    std::size_t nonzeros() const { return vals_.size(); }
    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return vals_; }

    /// Stored value at (i, j), zero if not stored. O(log nnz(row)).
    double at(std::size_t i, std::size_t j) const;

    /// Largest |A_ij - A_ji| over stored entries.
    double max_asymmetry() const;
    double max_abs() const;

    /// Row-major dense copy; for tests and small matrices.
    std::vector<double> to_dense() const;

    /// x^T A x
    double quadratic_form(std::span<const double> x) const;

    CsrMatrix scaled(double s) const;

private:
    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> vals_;
};

/// y = A x, summing each row in ascending column order.
std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

/// Sum of matrices of equal shape.
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double beta = 1.0);

struct SpdSolveOptions {
    double rel_tol = 1e-12;
    double symmetry_tol = 1e-10;
    /// Also accept ||A x - b|| <= 16 eps || |A| |x| + |b| ||, the smallest
    /// residual a double-precision x can have. Needed once 1/kappa ~ 1e9.
    bool accept_rounding_floor = true;
};

/**
 * Solves A x = b for symmetric positive definite A with a sparse LDL^T
 * factorisation (AMD ordering) followed by iterative refinement. A Jacobi
 * preconditioned CG pass, capped at 10 * nrows iterations, is the fallback
 * when refinement stalls. Throws LinearSolveError if
 * ||A x - b|| <= rel_tol ||b|| (or the rounding floor) cannot be met, if A is not symmetric to
 * symmetry_tol (relative to max |A_ij|), or if a nonpositive pivot appears.
 */
std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, const SpdSolveOptions& options = {});

inline std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, double rel_tol) {
    return solve_spd(a, b, SpdSolveOptions{rel_tol, 1e-10, true});
}

double norm2(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

}  // namespace obstacle_fem
