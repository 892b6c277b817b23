#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsplit {

using Vector = std::vector<double>;

/// Dense real matrix, column-major storage.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // column-major, data[i + j*rows]

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i + j * rows]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i + j * rows]; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vector col(std::size_t j) const {
        return Vector(data.begin() + j * rows, data.begin() + (j + 1) * rows);
    }
    void set_col(std::size_t j, const Vector& v) {
        for (std::size_t i = 0; i < rows; ++i) data[i + j * rows] = v[i];
    }
};

inline void check_finite(const Vector& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline void axpy(double a, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(Vector& v, double a) {
    for (double& x : v) x *= a;
}

inline Vector add(const Vector& a, const Vector& b) {
    Vector r(a);
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    return r;
}

inline Vector sub(const Vector& a, const Vector& b) {
    Vector r(a);
    for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
    return r;
}

// y = M v
inline Vector matvec(const DenseMatrix& m, const Vector& v) {
    if (v.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(m.rows, 0.0);
    for (std::size_t j = 0; j < m.cols; ++j) {
        const double vj = v[j];
        const double* c = &m.data[j * m.rows];
        for (std::size_t i = 0; i < m.rows; ++i) y[i] += c[i] * vj;
    }
    return y;
}

// y = M^T v
inline Vector matvec_transpose(const DenseMatrix& m, const Vector& v) {
    if (v.size() != m.rows) throw std::invalid_argument("matvec_transpose: dimension mismatch");
    Vector y(m.cols, 0.0);
    for (std::size_t j = 0; j < m.cols; ++j) {
        const double* c = &m.data[j * m.rows];
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) s += c[i] * v[i];
        y[j] = s;
    }
    return y;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t j = 0; j < b.cols; ++j)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double bkj = b(k, j);
            const double* ac = &a.data[k * a.rows];
            double* cc = &c.data[j * c.rows];
            for (std::size_t i = 0; i < a.rows; ++i) cc[i] += ac[i] * bkj;
        }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols, m.rows);
    for (std::size_t j = 0; j < m.cols; ++j)
        for (std::size_t i = 0; i < m.rows; ++i) t(j, i) = m(i, j);
    return t;
}

inline double frobenius_norm(const DenseMatrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

// M^T M, exploiting symmetry of the result.
inline DenseMatrix gram(const DenseMatrix& m) {
    DenseMatrix g(m.cols, m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) {
        for (std::size_t k = 0; k <= j; ++k) {
            const double* cj = &m.data[j * m.rows];
            const double* ck = &m.data[k * m.rows];
            double s = 0.0;
            for (std::size_t i = 0; i < m.rows; ++i) s += cj[i] * ck[i];
            g(j, k) = s;
            g(k, j) = s;
        }
    }
    return g;
}

}  // namespace gsplit
