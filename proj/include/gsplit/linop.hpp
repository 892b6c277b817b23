#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>

#include "gsplit/matrix.hpp"
#include "gsplit/sparse.hpp"

namespace gsplit {

enum class OpKind { dense, sparse, kronecker, composite, callback };

/// Matrix-free forward map: apply is A*v, apply_transpose is A^T*w.
/// Immutable after construction; safe to share across threads.
class LinearOperator {
  public:
    virtual ~LinearOperator() = default;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    OpKind kind() const { return kind_; }

    Vector apply(const Vector& v) const {
        if (v.size() != cols_) throw std::invalid_argument("apply: expected length-" + std::to_string(cols_) + " input, got " + std::to_string(v.size()));
        check_finite(v, "apply");
        return do_apply(v);
    }

    Vector apply_transpose(const Vector& w) const {
        if (w.size() != rows_) throw std::invalid_argument("apply_transpose: expected length-" + std::to_string(rows_) + " input, got " + std::to_string(w.size()));
        check_finite(w, "apply_transpose");
        return do_apply_transpose(w);
    }

  protected:
    LinearOperator(std::size_t r, std::size_t c, OpKind k) : rows_(r), cols_(c), kind_(k) {}
    virtual Vector do_apply(const Vector& v) const = 0;
    virtual Vector do_apply_transpose(const Vector& w) const = 0;

  private:
    std::size_t rows_, cols_;
    OpKind kind_;
};

using LinOpPtr = std::shared_ptr<const LinearOperator>;

class DenseOperator final : public LinearOperator {
  public:
    explicit DenseOperator(DenseMatrix m)
        : LinearOperator(m.rows, m.cols, OpKind::dense), m_(std::move(m)) {
        check_finite(m_.data, "DenseOperator");
    }
    const DenseMatrix& matrix() const { return m_; }

  protected:
    Vector do_apply(const Vector& v) const override { return matvec(m_, v); }
    Vector do_apply_transpose(const Vector& w) const override { return matvec_transpose(m_, w); }

  private:
    DenseMatrix m_;
};

class SparseOperator final : public LinearOperator {
  public:
    explicit SparseOperator(SparseMatrix m)
        : LinearOperator(m.rows, m.cols, OpKind::sparse), m_(std::move(m)) {}
    const SparseMatrix& matrix() const { return m_; }

  protected:
    Vector do_apply(const Vector& v) const override { return m_.apply(v); }
    Vector do_apply_transpose(const Vector& w) const override { return m_.apply_transpose(w); }

  private:
    SparseMatrix m_;
};

/// B (x) C without materializing the product: (B(x)C)vec(X) = vec(C X B^T)
/// for X with C.cols rows and B.cols columns, column-major vectorization.
class KroneckerOperator final : public LinearOperator {
  public:
    KroneckerOperator(DenseMatrix left, DenseMatrix right)
        : LinearOperator(left.rows * right.rows, left.cols * right.cols, OpKind::kronecker),
          b_(std::move(left)),
          c_(std::move(right)) {}

    const DenseMatrix& left() const { return b_; }
    const DenseMatrix& right() const { return c_; }

  protected:
    Vector do_apply(const Vector& v) const override { return kron_apply(b_, c_, v); }
    Vector do_apply_transpose(const Vector& w) const override {
        return kron_apply(transpose(b_), transpose(c_), w);
    }

  private:
    static Vector kron_apply(const DenseMatrix& b, const DenseMatrix& c, const Vector& v) {
        // X is c.cols x b.cols; result Y = C X B^T is c.rows x b.rows
        const std::size_t q = c.cols, s = b.cols, p = c.rows, r = b.rows;
        DenseMatrix y(p, s);
        for (std::size_t j = 0; j < s; ++j) {
            Vector xj(v.begin() + j * q, v.begin() + (j + 1) * q);
            y.set_col(j, matvec(c, xj));
        }
        Vector out(p * r, 0.0);
        for (std::size_t j = 0; j < r; ++j)
            for (std::size_t k = 0; k < s; ++k) {
                const double bjk = b(j, k);
                if (bjk == 0.0) continue;
                const double* yc = &y.data[k * p];
                double* oc = &out[j * p];
                for (std::size_t i = 0; i < p; ++i) oc[i] += yc[i] * bjk;
            }
        return out;
    }

    DenseMatrix b_, c_;
};

/// Product of operators, applied right to left.
class CompositeOperator final : public LinearOperator {
  public:
    CompositeOperator(LinOpPtr outer, LinOpPtr inner)
        : LinearOperator(outer->rows(), inner->cols(), OpKind::composite),
          outer_(std::move(outer)),
          inner_(std::move(inner)) {
        if (outer_->cols() != inner_->rows())
            throw std::invalid_argument("CompositeOperator: inner dimension mismatch");
    }

  protected:
    Vector do_apply(const Vector& v) const override { return outer_->apply(inner_->apply(v)); }
    Vector do_apply_transpose(const Vector& w) const override {
        return inner_->apply_transpose(outer_->apply_transpose(w));
    }

  private:
    LinOpPtr outer_, inner_;
};

class CallbackOperator final : public LinearOperator {
  public:
    using Fn = std::function<Vector(const Vector&)>;
    CallbackOperator(std::size_t rows, std::size_t cols, Fn fwd, Fn adj)
        : LinearOperator(rows, cols, OpKind::callback), fwd_(std::move(fwd)), adj_(std::move(adj)) {}

  protected:
    Vector do_apply(const Vector& v) const override { return fwd_(v); }
    Vector do_apply_transpose(const Vector& w) const override { return adj_(w); }

  private:
    Fn fwd_, adj_;
};

/// [A; B] vertical stack; apply concatenates, transpose-apply sums parts.
class StackedOperator final : public LinearOperator {
  public:
    StackedOperator(LinOpPtr top, LinOpPtr bottom)
        : LinearOperator(top->rows() + bottom->rows(), top->cols(), OpKind::composite),
          top_(std::move(top)),
          bottom_(std::move(bottom)) {
        if (top_->cols() != bottom_->cols())
            throw std::invalid_argument("StackedOperator: column mismatch");
    }

  protected:
    Vector do_apply(const Vector& v) const override {
        Vector a = top_->apply(v);
        Vector b = bottom_->apply(v);
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
    Vector do_apply_transpose(const Vector& w) const override {
        Vector wt(w.begin(), w.begin() + top_->rows());
        Vector wb(w.begin() + top_->rows(), w.end());
        Vector r = top_->apply_transpose(wt);
        axpy(1.0, bottom_->apply_transpose(wb), r);
        return r;
    }

  private:
    LinOpPtr top_, bottom_;
};

inline LinOpPtr make_dense_op(DenseMatrix m) {
    return std::make_shared<DenseOperator>(std::move(m));
}
inline LinOpPtr make_sparse_op(SparseMatrix m) {
    return std::make_shared<SparseOperator>(std::move(m));
}
inline LinOpPtr make_identity_op(std::size_t n) {
    return std::make_shared<CallbackOperator>(
        n, n, [](const Vector& v) { return v; }, [](const Vector& v) { return v; });
}
inline LinOpPtr make_scaled_op(double s, LinOpPtr op) {
    auto r = op->rows(), c = op->cols();
    return std::make_shared<CallbackOperator>(
        r, c,
        [s, op](const Vector& v) {
            Vector y = op->apply(v);
            scale(y, s);
            return y;
        },
        [s, op](const Vector& w) {
            Vector y = op->apply_transpose(w);
            scale(y, s);
            return y;
        });
}

/// Materialize the operator column by column (apply to basis vectors).
inline DenseMatrix to_dense(const LinearOperator& op) {
    DenseMatrix d(op.rows(), op.cols());
    Vector e(op.cols(), 0.0);
    for (std::size_t j = 0; j < op.cols(); ++j) {
        e[j] = 1.0;
        d.set_col(j, op.apply(e));
        e[j] = 0.0;
    }
    return d;
}

/// A^T A as a dense matrix, built from transpose-applies of operator columns.
inline DenseMatrix dense_normal_gram(const LinearOperator& op) {
    DenseMatrix g(op.cols(), op.cols());
    Vector e(op.cols(), 0.0);
    for (std::size_t j = 0; j < op.cols(); ++j) {
        e[j] = 1.0;
        g.set_col(j, op.apply_transpose(op.apply(e)));
        e[j] = 0.0;
    }
    // symmetrize roundoff
    for (std::size_t j = 0; j < g.cols; ++j)
        for (std::size_t i = 0; i < j; ++i) {
            double s = 0.5 * (g(i, j) + g(j, i));
            g(i, j) = s;
            g(j, i) = s;
        }
    return g;
}

/// A A^T as a dense matrix.
inline DenseMatrix dense_adjoint_gram(const LinearOperator& op) {
    DenseMatrix g(op.rows(), op.rows());
    Vector e(op.rows(), 0.0);
    for (std::size_t i = 0; i < op.rows(); ++i) {
        e[i] = 1.0;
        g.set_col(i, op.apply(op.apply_transpose(e)));
        e[i] = 0.0;
    }
    for (std::size_t j = 0; j < g.cols; ++j)
        for (std::size_t i = 0; i < j; ++i) {
            double s = 0.5 * (g(i, j) + g(j, i));
            g(i, j) = s;
            g(j, i) = s;
        }
    return g;
}

}  // namespace gsplit
