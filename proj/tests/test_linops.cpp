#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "gsplit/io.hpp"
#include "gsplit/linop.hpp"
#include "gsplit/rng.hpp"

using namespace gsplit;

namespace {

DenseMatrix random_dense(std::size_t r, std::size_t c, Rng& rng) {
    DenseMatrix m(r, c);
    for (double& x : m.data) x = rng.normal();
    return m;
}

}  // namespace

TEST(Apply, IdentityCase) {
    auto op = make_dense_op(DenseMatrix::identity(2));
    Vector v{3.0, -1.0};
    EXPECT_EQ(op->apply(v), v);
}

TEST(Apply, HandComputedDense) {
    DenseMatrix a(2, 3);
    a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 0;
    a(1, 0) = 0; a(1, 1) = 1; a(1, 2) = 1;
    auto op = make_dense_op(a);
    Vector y = op->apply({1.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(y[0], 3.0);
    EXPECT_DOUBLE_EQ(y[1], 2.0);

    Vector t = op->apply_transpose({1.0, 0.0});
    EXPECT_DOUBLE_EQ(t[0], 1.0);
    EXPECT_DOUBLE_EQ(t[1], 2.0);
    EXPECT_DOUBLE_EQ(t[2], 0.0);
}

TEST(Apply, DimensionAndFiniteErrors) {
    auto op = make_dense_op(DenseMatrix::identity(3));
    EXPECT_THROW(op->apply(Vector(2, 0.0)), std::invalid_argument);
    EXPECT_THROW(op->apply_transpose(Vector(4, 0.0)), std::invalid_argument);
    Vector bad{1.0, std::nan(""), 0.0};
    EXPECT_THROW(op->apply(bad), std::invalid_argument);
}

// Explicit-transpose oracle: apply_transpose of a random dense operator
// matches the materialized transposed matrix-vector product.
TEST(Apply, TransposeMatchesExplicitOracle) {
    Rng rng(7);
    DenseMatrix a = random_dense(5, 8, rng);
    auto op = make_dense_op(a);
    DenseMatrix at = transpose(a);
    Vector w = rng.normal_vector(5);
    Vector got = op->apply_transpose(w);
    Vector want = matvec(at, w);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
}

// Kronecker oracle: expand L_vert (x) L_hor explicitly for a 3x4 grid and
// compare against the reshape-based application.
TEST(Kronecker, MatchesExplicitExpansion) {
    Rng rng(11);
    DenseMatrix lv = random_dense(3, 3, rng);   // vertical blocks
    DenseMatrix lh = random_dense(4, 4, rng);   // horizontal blocks
    KroneckerOperator kron(lv, lh);
    ASSERT_EQ(kron.rows(), 12u);
    ASSERT_EQ(kron.cols(), 12u);

    DenseMatrix full(12, 12);
    for (std::size_t bi = 0; bi < 3; ++bi)
        for (std::size_t bj = 0; bj < 3; ++bj)
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j)
                    full(bi * 4 + i, bj * 4 + j) = lv(bi, bj) * lh(i, j);

    Vector v = rng.normal_vector(12);
    Vector got = kron.apply(v);
    Vector want = matvec(full, v);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);

    Vector w = rng.normal_vector(12);
    Vector gott = kron.apply_transpose(w);
    Vector wantt = matvec_transpose(full, w);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(gott[i], wantt[i], 1e-12);
}

// Adjoint consistency <A v, w> == <v, A^T w> across operator kinds.
TEST(Adjoint, ConsistencyAcrossKinds) {
    Rng rng(3);
    std::vector<LinOpPtr> ops;
    ops.push_back(make_dense_op(random_dense(6, 9, rng)));
    {
        std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
        for (int k = 0; k < 20; ++k)
            trips.emplace_back(std::size_t(rng.uniform() * 6), std::size_t(rng.uniform() * 9),
                               rng.normal());
        ops.push_back(make_sparse_op(SparseMatrix::from_triplets(6, 9, trips)));
    }
    ops.push_back(std::make_shared<KroneckerOperator>(random_dense(2, 3, rng), random_dense(3, 3, rng)));
    ops.push_back(std::make_shared<CompositeOperator>(make_dense_op(random_dense(6, 4, rng)),
                                                      make_dense_op(random_dense(4, 9, rng))));
    ops.push_back(std::make_shared<StackedOperator>(make_dense_op(random_dense(4, 9, rng)),
                                                    make_identity_op(9)));

    for (const auto& op : ops) {
        for (int trial = 0; trial < 5; ++trial) {
            Vector v = rng.normal_vector(op->cols());
            Vector w = rng.normal_vector(op->rows());
            double lhs = dot(op->apply(v), w);
            double rhs = dot(v, op->apply_transpose(w));
            double s = std::max(1.0, std::abs(lhs));
            EXPECT_NEAR(lhs, rhs, 1e-12 * s);
        }
    }
}

TEST(Adjoint, BasisPairConsistencyDenseSparse) {
    Rng rng(5);
    DenseMatrix a = random_dense(4, 5, rng);
    auto op = make_dense_op(a);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            Vector ei(4, 0.0), ej(5, 0.0);
            ei[i] = 1.0;
            ej[j] = 1.0;
            EXPECT_NEAR(op->apply_transpose(ei)[j], op->apply(ej)[i], 1e-15);
        }
}

TEST(SparseMatrix, DuplicateTripletsAreSummed) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips{
        {0, 0, 1.0}, {0, 0, 2.0}, {1, 1, -1.0}};
    SparseMatrix m = SparseMatrix::from_triplets(2, 2, trips);
    EXPECT_EQ(m.nnz(), 2u);
    DenseMatrix d = m.to_dense();
    EXPECT_DOUBLE_EQ(d(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(d(1, 1), -1.0);
}

TEST(MatrixIo, DenseRoundTrip) {
    Rng rng(13);
    DenseMatrix m = random_dense(4, 3, rng);
    auto path = std::filesystem::temp_directory_path() / "gsplit_dense_rt.txt";
    save_dense(m, path.string());
    LoadedMatrix l = load_matrix(path.string());
    ASSERT_FALSE(l.is_sparse);
    ASSERT_EQ(l.dense.rows, 4u);
    ASSERT_EQ(l.dense.cols, 3u);
    EXPECT_EQ(l.dense.data, m.data);
    std::filesystem::remove(path);
}

TEST(MatrixIo, SparseRoundTrip) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips{
        {0, 1, 0.5}, {2, 0, -1.25}, {1, 1, 3.0}};
    SparseMatrix m = SparseMatrix::from_triplets(3, 2, trips);
    auto path = std::filesystem::temp_directory_path() / "gsplit_sparse_rt.txt";
    save_sparse(m, path.string());
    LoadedMatrix l = load_matrix(path.string());
    ASSERT_TRUE(l.is_sparse);
    EXPECT_EQ(l.sparse.values, m.values);
    EXPECT_EQ(l.sparse.row_idx, m.row_idx);
    EXPECT_EQ(l.sparse.col_ptr, m.col_ptr);
    std::filesystem::remove(path);
}

TEST(Rng, DeterministicStreams) {
    Rng a(42, 3), b(42, 3), c(42, 4);
    for (int i = 0; i < 100; ++i) {
        double x = a.normal();
        EXPECT_EQ(x, b.normal());
    }
    bool differs = false;
    Rng a2(42, 3);
    for (int i = 0; i < 10; ++i) differs |= (a2.normal() != c.normal());
    EXPECT_TRUE(differs);
}
