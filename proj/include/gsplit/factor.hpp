#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "gsplit/matrix.hpp"

namespace gsplit {

struct NotPositiveDefiniteError : std::runtime_error {
    std::size_t pivot_index;
    explicit NotPositiveDefiniteError(std::size_t idx)
        : std::runtime_error("cholesky_factor: non-positive pivot at index " + std::to_string(idx)),
          pivot_index(idx) {}
};

struct RankDeficientError : std::runtime_error {
    std::size_t numerical_rank;
    explicit RankDeficientError(std::size_t rank)
        : std::runtime_error("dense_lstsq: rank deficient, numerical rank " + std::to_string(rank)),
          numerical_rank(rank) {}
};

struct CholeskyFactor {
    std::size_t dim = 0;
    DenseMatrix lower;  // lower triangular, positive diagonal
};

/// Cholesky factorization of an SPD matrix. Input must be symmetric to
/// 1e-12 relative Frobenius; it is symmetrized by averaging before
/// factorization to absorb roundoff from gram constructions.
inline CholeskyFactor cholesky_factor(const DenseMatrix& m) {
    if (m.rows != m.cols) throw std::invalid_argument("cholesky_factor: matrix not square");
    const std::size_t n = m.rows;
    double asym = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < j; ++i) {
            double d = m(i, j) - m(j, i);
            asym += d * d;
        }
    double fro = frobenius_norm(m);
    if (std::sqrt(asym) > 1e-12 * fro)
        throw std::invalid_argument("cholesky_factor: matrix not symmetric");

    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j; i < n; ++i) l(i, j) = 0.5 * (m(i, j) + m(j, i));

    for (std::size_t j = 0; j < n; ++j) {
        double* lj = &l.data[j * n];
        for (std::size_t k = 0; k < j; ++k) {
            const double ljk = l(j, k);
            if (ljk == 0.0) continue;
            const double* lk = &l.data[k * n];
            for (std::size_t i = j; i < n; ++i) lj[i] -= lk[i] * ljk;
        }
        double piv = lj[j];
        if (!(piv > 0.0)) throw NotPositiveDefiniteError(j);
        double d = std::sqrt(piv);
        lj[j] = d;
        for (std::size_t i = j + 1; i < n; ++i) lj[i] /= d;
    }
    CholeskyFactor f;
    f.dim = n;
    f.lower = std::move(l);
    return f;
}

/// Solve M x = b given M = L L^T.
inline Vector solve_spd(const CholeskyFactor& f, const Vector& b) {
    if (b.size() != f.dim) throw std::invalid_argument("solve_spd: dimension mismatch");
    const std::size_t n = f.dim;
    const DenseMatrix& l = f.lower;
    Vector y(b);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] /= l(j, j);
        const double yj = y[j];
        const double* lj = &l.data[j * n];
        for (std::size_t i = j + 1; i < n; ++i) y[i] -= lj[i] * yj;
    }
    for (std::size_t jj = n; jj-- > 0;) {
        const double* lj = &l.data[jj * n];
        double s = y[jj];
        for (std::size_t i = jj + 1; i < n; ++i) s -= lj[i] * y[i];
        y[jj] = s / lj[jj];
    }
    return y;
}

/// Multi right-hand-side solve; one factorization serves all columns.
/// Columns are solved independently, identical to column-by-column calls.
inline DenseMatrix solve_spd(const CholeskyFactor& f, const DenseMatrix& b) {
    if (b.rows != f.dim) throw std::invalid_argument("solve_spd: row count mismatch");
    if (b.cols < 1) throw std::invalid_argument("solve_spd: need at least one column");
    DenseMatrix x(b.rows, b.cols);
    for (std::size_t j = 0; j < b.cols; ++j) x.set_col(j, solve_spd(f, b.col(j)));
    return x;
}

/// Householder QR of a p x q matrix, p >= q.
struct QrFactor {
    DenseMatrix qr;   // R in upper triangle, Householder vectors below
    Vector tau;       // Householder coefficients
    std::size_t rows, cols;
};

inline QrFactor qr_factor(const DenseMatrix& a) {
    if (a.rows < a.cols) throw std::invalid_argument("qr_factor: need rows >= cols");
    QrFactor f{a, Vector(a.cols, 0.0), a.rows, a.cols};
    DenseMatrix& m = f.qr;
    const std::size_t p = a.rows, q = a.cols;
    for (std::size_t k = 0; k < q; ++k) {
        double nrm = 0.0;
        for (std::size_t i = k; i < p; ++i) nrm += m(i, k) * m(i, k);
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) {
            f.tau[k] = 0.0;
            continue;
        }
        double alpha = m(k, k) >= 0 ? -nrm : nrm;
        double v0 = m(k, k) - alpha;
        m(k, k) = alpha;
        for (std::size_t i = k + 1; i < p; ++i) m(i, k) /= v0;
        f.tau[k] = -v0 / alpha;  // tau = 2 / (v^T v) with v = (1, m(k+1..p,k))
        for (std::size_t j = k + 1; j < q; ++j) {
            double s = m(k, j);
            for (std::size_t i = k + 1; i < p; ++i) s += m(i, k) * m(i, j);
            s *= f.tau[k];
            m(k, j) -= s;
            for (std::size_t i = k + 1; i < p; ++i) m(i, j) -= s * m(i, k);
        }
    }
    return f;
}

/// Apply Q^T to a length-p vector.
inline Vector qr_qt_apply(const QrFactor& f, const Vector& b) {
    Vector y(b);
    for (std::size_t k = 0; k < f.cols; ++k) {
        if (f.tau[k] == 0.0) continue;
        double s = y[k];
        for (std::size_t i = k + 1; i < f.rows; ++i) s += f.qr(i, k) * y[i];
        s *= f.tau[k];
        y[k] -= s;
        for (std::size_t i = k + 1; i < f.rows; ++i) y[i] -= s * f.qr(i, k);
    }
    return y;
}

/// Apply Q to a length-p vector.
inline Vector qr_q_apply(const QrFactor& f, const Vector& b) {
    Vector y(b);
    for (std::size_t kk = f.cols; kk-- > 0;) {
        if (f.tau[kk] == 0.0) continue;
        double s = y[kk];
        for (std::size_t i = kk + 1; i < f.rows; ++i) s += f.qr(i, kk) * y[i];
        s *= f.tau[kk];
        y[kk] -= s;
        for (std::size_t i = kk + 1; i < f.rows; ++i) y[i] -= s * f.qr(i, kk);
    }
    return y;
}

inline Vector qr_solve_upper(const QrFactor& f, const Vector& c) {
    const std::size_t q = f.cols;
    Vector x(c.begin(), c.begin() + q);
    for (std::size_t jj = q; jj-- > 0;) {
        double s = x[jj];
        for (std::size_t i = jj + 1; i < q; ++i) s -= f.qr(jj, i) * x[i];
        x[jj] = s / f.qr(jj, jj);
    }
    return x;
}

/// Solve R^T y = c (forward substitution on the transposed triangle).
inline Vector qr_solve_upper_transpose(const QrFactor& f, const Vector& c) {
    const std::size_t q = f.cols;
    Vector x(c.begin(), c.begin() + q);
    for (std::size_t j = 0; j < q; ++j) {
        double s = x[j];
        for (std::size_t i = 0; i < j; ++i) s -= f.qr(i, j) * x[i];
        x[j] = s / f.qr(j, j);
    }
    return x;
}

/// argmin ||A x - b|| via Householder QR; throws RankDeficientError when a
/// diagonal of R collapses relative to the largest.
inline Vector dense_lstsq(const DenseMatrix& a, const Vector& b) {
    if (a.rows < a.cols) throw std::invalid_argument("dense_lstsq: need rows >= cols");
    if (b.size() != a.rows) throw std::invalid_argument("dense_lstsq: rhs length mismatch");
    QrFactor f = qr_factor(a);
    double rmax = 0.0;
    for (std::size_t k = 0; k < f.cols; ++k) rmax = std::max(rmax, std::abs(f.qr(k, k)));
    std::size_t rank = 0;
    for (std::size_t k = 0; k < f.cols; ++k)
        if (std::abs(f.qr(k, k)) > 1e-13 * rmax) ++rank;
    if (rank < f.cols) throw RankDeficientError(rank);
    Vector c = qr_qt_apply(f, b);
    return qr_solve_upper(f, c);
}

}  // namespace gsplit
