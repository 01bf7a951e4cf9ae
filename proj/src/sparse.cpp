#include "obstacle_fem/sparse.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace obstacle_fem {

CsrMatrix CsrMatrix::from_triplets(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols) {
    for (const auto& t : triplets) {
        if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= nrows || static_cast<std::size_t>(t.col) >= ncols) {
            std::ostringstream msg;
            msg << "csr_from_triplets: index (" << t.row << "," << t.col << ") out of range for " << nrows << "x" << ncols;
            throw SparseError(msg.str());
        }
    }
    // Duplicates are summed in ascending value order so the stored sum does
    // not depend on the order of the input triplets.
    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = triplets[a];
        const auto& tb = triplets[b];
        if (ta.row != tb.row) return ta.row < tb.row;
        if (ta.col != tb.col) return ta.col < tb.col;
        return ta.value < tb.value;
    });

    CsrMatrix m;
    m.nrows_ = nrows;
    m.ncols_ = ncols;
    m.row_ptr_.assign(nrows + 1, 0);
    std::size_t k = 0;
    while (k < order.size()) {
        const auto& first = triplets[order[k]];
        double sum = 0.0;
        std::size_t j = k;
        while (j < order.size() && triplets[order[j]].row == first.row && triplets[order[j]].col == first.col) {
            sum += triplets[order[j]].value;
            ++j;
        }
        m.col_idx_.push_back(first.col);
        m.vals_.push_back(sum);
        ++m.row_ptr_[first.row + 1];
        k = j;
    }
    for (std::size_t i = 0; i < nrows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back({static_cast<int>(i), static_cast<int>(i), 1.0});
    return from_triplets(t, n, n);
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    const auto begin = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto end = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(begin, end, static_cast<int>(j));
    if (it == end || *it != static_cast<int>(j)) return 0.0;
    return vals_[static_cast<std::size_t>(it - col_idx_.begin())];
}

double CsrMatrix::max_asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < nrows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const auto j = static_cast<std::size_t>(col_idx_[k]);
            const double other = j < nrows_ && i < ncols_ ? at(j, i) : 0.0;
            worst = std::max(worst, std::abs(vals_[k] - other));
        }
    return worst;
}

double CsrMatrix::max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> CsrMatrix::to_dense() const {
    std::vector<double> d(nrows_ * ncols_, 0.0);
    for (std::size_t i = 0; i < nrows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i * ncols_ + col_idx_[k]] = vals_[k];
    return d;
}

double CsrMatrix::quadratic_form(std::span<const double> x) const {
    return dot(x, spmv(*this, x));
}

CsrMatrix CsrMatrix::scaled(double s) const {
    CsrMatrix m = *this;
    for (double& v : m.vals_) v *= s;
    return m;
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) {
        std::ostringstream msg;
        msg << "spmv: vector length " << x.size() << " does not match " << a.cols() << " columns";
        throw SparseError(msg.str());
    }
    std::vector<double> y(a.rows(), 0.0);
    const auto& rp = a.row_ptr();
    const auto& ci = a.col_idx();
    const auto& v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * x[ci[k]];
        y[i] = s;
    }
    return y;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double beta) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw SparseError("add: shape mismatch");
    std::vector<Triplet> t;
    t.reserve(a.nonzeros() + b.nonzeros());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
            t.push_back({static_cast<int>(i), a.col_idx()[k], a.values()[k]});
        for (std::size_t k = b.row_ptr()[i]; k < b.row_ptr()[i + 1]; ++k)
            t.push_back({static_cast<int>(i), b.col_idx()[k], beta * b.values()[k]});
    }
    return CsrMatrix::from_triplets(t, a.rows(), a.cols());
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

namespace {

// b - A x accumulated in extended precision, plus the residual norm that
// rounding x to double alone can produce, 16 eps || |A| |x| + |b| ||.
struct Residual {
    std::vector<double> r;
    double norm = 0.0;
    double floor = 0.0;
};

Residual residual_of(const CsrMatrix& a, std::span<const double> x, std::span<const double> b) {
    Residual out;
    out.r.resize(a.rows());
    long double floor2 = 0.0L;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        long double s = b[i];
        long double mag = std::abs(b[i]);
        for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
            const long double term = static_cast<long double>(a.values()[k]) * x[static_cast<std::size_t>(a.col_idx()[k])];
            s -= term;
            mag += std::abs(term);
        }
        out.r[i] = static_cast<double>(s);
        floor2 += mag * mag;
    }
    out.norm = norm2(out.r);
    out.floor = 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::sqrt(floor2));
    return out;
}

// Jacobi-preconditioned CG continuing from x. Returns the final relative residual.
double pcg(const CsrMatrix& a, std::span<const double> b, std::vector<double>& x, double rel_tol) {
    const std::size_t n = a.rows();
    const double bnorm = norm2(b);
    std::vector<double> inv_diag(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.at(i, i);
        if (d > 0.0) inv_diag[i] = 1.0 / d;
    }
    auto r = residual_of(a, x, b).r;
    std::vector<double> z(n), p(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double rel = norm2(r) / bnorm;
    const std::size_t cap = 10 * n;
    for (std::size_t it = 0; it < cap && rel > rel_tol; ++it) {
        const auto ap = spmv(a, p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_new = dot(r, z);
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + (rz_new / rz) * p[i];
        rz = rz_new;
        rel = norm2(r) / bnorm;
    }
    // Recompute the true residual; the recurrence drifts.
    return residual_of(a, x, b).norm / bnorm;
}

}  // namespace

std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, const SpdSolveOptions& options) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw SparseError("solve_spd: matrix is not square");
    if (b.size() != n) throw SparseError("solve_spd: right-hand side length mismatch");
    const double scale = a.max_abs();
    const double asym = a.max_asymmetry();
    if (asym > options.symmetry_tol * scale) {
        std::ostringstream msg;
        msg << "solve_spd: matrix not symmetric (max |A - A^T| = " << asym << ", max |A| = " << scale << ")";
        throw LinearSolveError(msg.str(), std::numeric_limits<double>::quiet_NaN());
    }
    const double bnorm = norm2(b);
    std::vector<double> x(n, 0.0);
    if (bnorm == 0.0) return x;

    using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
    SpMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    {
        std::vector<Eigen::Triplet<double, int>> t;
        t.reserve(a.nonzeros());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
                t.emplace_back(static_cast<int>(i), a.col_idx()[k], a.values()[k]);
        m.setFromTriplets(t.begin(), t.end());
    }
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    ldlt.compute(m);
    if (ldlt.info() != Eigen::Success) throw LinearSolveError("solve_spd: factorisation failed", std::numeric_limits<double>::quiet_NaN());
    if (ldlt.vectorD().minCoeff() <= 0.0) throw LinearSolveError("solve_spd: matrix is not positive definite", std::numeric_limits<double>::quiet_NaN());

    Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x0 = ldlt.solve(bv);
    x.assign(x0.data(), x0.data() + n);
    const auto accepted = [&](const Residual& res) {
        const double target = options.rel_tol * bnorm;
        return res.norm <= (options.accept_rounding_floor ? std::max(target, res.floor) : target);
    };
    std::vector<double> best = x;
    double best_norm = std::numeric_limits<double>::infinity();
    for (int refinement = 0; refinement <= 8; ++refinement) {
        const auto res = residual_of(a, x, b);
        if (res.norm < best_norm) {
            best = x;
            best_norm = res.norm;
        }
        if (accepted(res)) return x;
        const Eigen::VectorXd dx = ldlt.solve(Eigen::Map<const Eigen::VectorXd>(res.r.data(), static_cast<Eigen::Index>(n)));
        for (std::size_t i = 0; i < n; ++i) x[i] += dx[static_cast<Eigen::Index>(i)];
    }

    x = best;
    pcg(a, b, x, options.rel_tol);
    const auto res = residual_of(a, x, b);
    if (accepted(res)) return x;
    const double rel = std::min(res.norm, best_norm) / bnorm;
    std::ostringstream msg;
    msg << "solve_spd: no convergence, relative residual " << rel << " > " << options.rel_tol;
    throw LinearSolveError(msg.str(), rel);
}

}  // namespace obstacle_fem
