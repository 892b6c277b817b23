#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "gsplit/matrix.hpp"

namespace gsplit {

/// Sparse real matrix in compressed-column (CSC) form.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> col_ptr;  // size cols+1
    std::vector<std::size_t> row_idx;  // size nnz
    std::vector<double> values;        // size nnz

    std::size_t nnz() const { return values.size(); }

    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<std::tuple<std::size_t, std::size_t, double>> trips) {
        for (const auto& [i, j, v] : trips) {
            (void)v;
            if (i >= rows || j >= cols)
                throw std::invalid_argument("from_triplets: index out of range");
        }
        std::sort(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
            return std::get<0>(a) < std::get<0>(b);
        });
        // merge duplicates (sorted, so equal (i,j) are adjacent)
        std::vector<std::tuple<std::size_t, std::size_t, double>> merged;
        merged.reserve(trips.size());
        for (const auto& t : trips) {
            if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(t) &&
                std::get<1>(merged.back()) == std::get<1>(t)) {
                std::get<2>(merged.back()) += std::get<2>(t);
            } else {
                merged.push_back(t);
            }
        }
        SparseMatrix m;
        m.rows = rows;
        m.cols = cols;
        m.col_ptr.assign(cols + 1, 0);
        for (const auto& [i, j, v] : merged) {
            (void)i;
            (void)v;
            ++m.col_ptr[j + 1];
        }
        for (std::size_t j = 0; j < cols; ++j) m.col_ptr[j + 1] += m.col_ptr[j];
        m.row_idx.resize(m.col_ptr[cols]);
        m.values.resize(m.col_ptr[cols]);
        std::vector<std::size_t> next(m.col_ptr.begin(), m.col_ptr.end() - 1);
        for (const auto& [i, j, v] : merged) {
            m.row_idx[next[j]] = i;
            m.values[next[j]] = v;
            ++next[j];
        }
        return m;
    }

    Vector apply(const Vector& v) const {
        if (v.size() != cols) throw std::invalid_argument("sparse apply: dimension mismatch");
        Vector y(rows, 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
            const double vj = v[j];
            if (vj == 0.0) continue;
            for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) y[row_idx[k]] += values[k] * vj;
        }
        return y;
    }

    Vector apply_transpose(const Vector& v) const {
        if (v.size() != rows) throw std::invalid_argument("sparse apply_transpose: dimension mismatch");
        Vector y(cols, 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) s += values[k] * v[row_idx[k]];
            y[j] = s;
        }
        return y;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows, cols);
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) d(row_idx[k], j) += values[k];
        return d;
    }
};

inline SparseMatrix sparse_diagonal(const Vector& d) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    trips.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) trips.emplace_back(i, i, d[i]);
    return SparseMatrix::from_triplets(d.size(), d.size(), std::move(trips));
}

}  // namespace gsplit
