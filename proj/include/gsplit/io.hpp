#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gsplit/matrix.hpp"
#include "gsplit/sparse.hpp"

namespace gsplit {

// Matrix file format (text):
//   header line:  rows cols kind        with kind in {dense, sparse}
//   dense body:   entries in column-major order, whitespace separated
//   sparse body:  one "i j v" triplet per line, 0-indexed
// Values are written with 17 significant digits so round trips are exact.

inline void save_dense(const DenseMatrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_dense: cannot open " + path);
    f << m.rows << ' ' << m.cols << " dense\n";
    f << std::setprecision(17);
    for (std::size_t k = 0; k < m.data.size(); ++k)
        f << m.data[k] << ((k + 1) % m.rows == 0 ? '\n' : ' ');
}

inline void save_sparse(const SparseMatrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_sparse: cannot open " + path);
    f << m.rows << ' ' << m.cols << " sparse\n";
    f << std::setprecision(17);
    for (std::size_t j = 0; j < m.cols; ++j)
        for (std::size_t k = m.col_ptr[j]; k < m.col_ptr[j + 1]; ++k)
            f << m.row_idx[k] << ' ' << j << ' ' << m.values[k] << '\n';
}

struct LoadedMatrix {
    bool is_sparse = false;
    DenseMatrix dense;
    SparseMatrix sparse;
    std::size_t rows() const { return is_sparse ? sparse.rows : dense.rows; }
    std::size_t cols() const { return is_sparse ? sparse.cols : dense.cols; }
};

inline LoadedMatrix load_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_matrix: cannot open " + path);
    std::size_t rows, cols;
    std::string kind;
    if (!(f >> rows >> cols >> kind)) throw std::runtime_error("load_matrix: bad header in " + path);
    LoadedMatrix out;
    if (kind == "dense") {
        out.dense = DenseMatrix(rows, cols);
        for (std::size_t k = 0; k < rows * cols; ++k)
            if (!(f >> out.dense.data[k]))
                throw std::runtime_error("load_matrix: truncated dense body in " + path);
    } else if (kind == "sparse") {
        out.is_sparse = true;
        std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
        std::size_t i, j;
        double v;
        while (f >> i >> j >> v) trips.emplace_back(i, j, v);
        out.sparse = SparseMatrix::from_triplets(rows, cols, std::move(trips));
    } else {
        throw std::runtime_error("load_matrix: unknown kind '" + kind + "' in " + path);
    }
    return out;
}

inline void save_vector(const Vector& v, const std::string& path) {
    DenseMatrix m(v.size(), 1);
    m.data = v;
    save_dense(m, path);
}

inline Vector load_vector(const std::string& path) {
    LoadedMatrix m = load_matrix(path);
    if (m.is_sparse || m.dense.cols != 1)
        throw std::runtime_error("load_vector: expected a dense single-column matrix in " + path);
    return m.dense.data;
}

inline std::string format_full(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace gsplit
