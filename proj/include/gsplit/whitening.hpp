#pragma once

#include <memory>
#include <stdexcept>

#include "gsplit/factor.hpp"
#include "gsplit/linop.hpp"
#include "gsplit/sampler.hpp"

namespace gsplit {

/// General Gaussian model: data b = A x + noise, prior N(x0, Gamma) with
/// Gamma^{-1} = L^T L given through its factor L, noise N(0, Sigma) with
/// Sigma^{-1} = S^T S. Exactly one of prior_precision_factor (square L) or
/// transform_prior (rectangular L, p >= n full column rank) must be set.
struct GeneralGaussianModel {
    LinOpPtr op;  // A, m x n
    Vector b;
    Vector x0;                         // empty means zero
    LinOpPtr prior_precision_factor;   // square invertible L
    LinOpPtr transform_prior;          // p x n, full column rank
    LinOpPtr noise_precision_factor;   // S; empty means identity

    std::size_t m() const { return op->rows(); }
    std::size_t n() const { return op->cols(); }

    void validate() const {
        if (!op) throw std::invalid_argument("model: missing forward operator");
        if (static_cast<bool>(prior_precision_factor) == static_cast<bool>(transform_prior))
            throw std::invalid_argument(
                "model: exactly one of prior_precision_factor / transform_prior required");
        if (b.size() != m()) throw std::invalid_argument("model: data length mismatch");
        if (!x0.empty() && x0.size() != n())
            throw std::invalid_argument("model: prior mean length mismatch");
        if (prior_precision_factor &&
            (prior_precision_factor->rows() != n() || prior_precision_factor->cols() != n()))
            throw std::invalid_argument("model: prior factor must be n x n");
        if (transform_prior &&
            (transform_prior->cols() != n() || transform_prior->rows() < n()))
            throw std::invalid_argument("model: transform prior must be p x n with p >= n");
        if (noise_precision_factor &&
            (noise_precision_factor->rows() != m() || noise_precision_factor->cols() != m()))
            throw std::invalid_argument("model: noise factor must be m x m");
    }
};

namespace detail {

/// Inverse of a square operator through a QR factorization of its dense form.
class DenseInverseOperator final : public LinearOperator {
  public:
    explicit DenseInverseOperator(const LinearOperator& op)
        : LinearOperator(op.rows(), op.cols(), OpKind::callback) {
        if (op.rows() != op.cols())
            throw std::invalid_argument("inverse operator: matrix must be square");
        qr_ = qr_factor(to_dense(op));
        check_invertible(qr_, "inverse operator");
    }

    static void check_invertible(const QrFactor& qr, const char* who) {
        double rmax = 0.0;
        for (std::size_t k = 0; k < qr.cols; ++k) rmax = std::max(rmax, std::abs(qr.qr(k, k)));
        for (std::size_t k = 0; k < qr.cols; ++k)
            if (std::abs(qr.qr(k, k)) <= 1e-13 * rmax)
                throw std::invalid_argument(std::string(who) + ": matrix is numerically singular");
    }

  protected:
    Vector do_apply(const Vector& v) const override {
        // L x = v  =>  x = R^{-1} Q^T v
        return qr_solve_upper(qr_, qr_qt_apply(qr_, v));
    }
    Vector do_apply_transpose(const Vector& v) const override {
        // L^T x = v  =>  x = Q R^{-T} v
        return qr_q_apply(qr_, qr_solve_upper_transpose(qr_, v));
    }

  private:
    QrFactor qr_;
};

/// Inverse of B (x) C using per-block QR solves: (B (x) C)^{-1} = B^{-1} (x) C^{-1}.
class KroneckerInverseOperator final : public LinearOperator {
  public:
    KroneckerInverseOperator(const DenseMatrix& outer, const DenseMatrix& inner)
        : LinearOperator(outer.rows * inner.rows, outer.cols * inner.cols, OpKind::callback),
          nb_(outer.rows),
          nc_(inner.rows) {
        if (outer.rows != outer.cols || inner.rows != inner.cols)
            throw std::invalid_argument("kronecker inverse: blocks must be square");
        qb_ = qr_factor(outer);
        qc_ = qr_factor(inner);
        DenseInverseOperator::check_invertible(qb_, "kronecker inverse");
        DenseInverseOperator::check_invertible(qc_, "kronecker inverse");
    }

  protected:
    // vec(X) with X inner-dim x outer-dim; solve C Y = X, then Z B^T = Y.
    Vector do_apply(const Vector& v) const override {
        return solve_blocks(v, /*transposed=*/false);
    }
    Vector do_apply_transpose(const Vector& v) const override {
        return solve_blocks(v, /*transposed=*/true);
    }

  private:
    Vector solve_blocks(const Vector& v, bool transposed) const {
        Vector out(nb_ * nc_);
        DenseMatrix y(nc_, nb_);
        for (std::size_t j = 0; j < nb_; ++j) {
            Vector col(v.begin() + j * nc_, v.begin() + (j + 1) * nc_);
            y.set_col(j, transposed ? qr_q_apply(qc_, qr_solve_upper_transpose(qc_, col))
                                    : qr_solve_upper(qc_, qr_qt_apply(qc_, col)));
        }
        for (std::size_t i = 0; i < nc_; ++i) {
            Vector row(nb_);
            for (std::size_t j = 0; j < nb_; ++j) row[j] = y(i, j);
            // rows of X = C^{-1} Y B^{-T} need a B-solve; the transpose
            // variant X = C^{-T} Y B^{-1} needs a B^T-solve.
            Vector s = transposed ? qr_q_apply(qb_, qr_solve_upper_transpose(qb_, row))
                                  : qr_solve_upper(qb_, qr_qt_apply(qb_, row));
            for (std::size_t j = 0; j < nb_; ++j) out[j * nc_ + i] = s[j];
        }
        return out;
    }

    std::size_t nb_, nc_;
    QrFactor qb_, qc_;
};

inline LinOpPtr make_inverse_op(const LinOpPtr& op, std::size_t dense_cap = 2000) {
    if (auto kron = std::dynamic_pointer_cast<const KroneckerOperator>(op))
        return std::make_shared<KroneckerInverseOperator>(kron->left(), kron->right());
    if (op->rows() > dense_cap)
        throw std::invalid_argument("inverse operator: dimension exceeds dense cap");
    return std::make_shared<DenseInverseOperator>(*op);
}

}  // namespace detail

/// Change of variables to standard form: xt = L (x - x0), At = S A L^{-1},
/// bt = S (b - A x0). The returned back_transform maps xt back to x.
inline StandardFormModel whiten(const GeneralGaussianModel& model, std::size_t dense_cap = 2000) {
    model.validate();
    if (!model.prior_precision_factor)
        throw std::invalid_argument("whiten: requires a square prior precision factor");
    LinOpPtr linv = detail::make_inverse_op(model.prior_precision_factor, dense_cap);
    LinOpPtr s = model.noise_precision_factor;

    LinOpPtr a_linv = std::make_shared<CompositeOperator>(model.op, linv);
    StandardFormModel out;
    out.op = s ? LinOpPtr(std::make_shared<CompositeOperator>(s, a_linv)) : a_linv;

    Vector resid = model.b;
    if (!model.x0.empty()) resid = sub(model.b, model.op->apply(model.x0));
    out.b = s ? s->apply(resid) : resid;

    Vector x0 = model.x0.empty() ? Vector(model.n(), 0.0) : model.x0;
    out.back_transform = [linv, x0](const Vector& xt) {
        Vector x = linv->apply(xt);
        axpy(1.0, x0, x);
        return x;
    };
    return out;
}

/// Pseudoinverse of a tall full-column-rank L through the gram factor:
/// L^+ z = (L^T L)^{-1} L^T z.
struct PinvOperator {
    LinOpPtr L;
    CholeskyFactor gram_factor;
};

inline PinvOperator make_pinv(const LinOpPtr& L, std::size_t dense_cap = 2000) {
    if (L->rows() < L->cols())
        throw std::invalid_argument("make_pinv: operator must have at least as many rows as columns");
    if (L->cols() > dense_cap)
        throw std::invalid_argument("make_pinv: column count exceeds dense cap");
    return PinvOperator{L, cholesky_factor(dense_normal_gram(*L))};
}

inline Vector pinv_apply(const PinvOperator& p, const Vector& z) {
    return solve_spd(p.gram_factor, p.L->apply_transpose(z));
}

inline Vector pinv_transpose_apply(const PinvOperator& p, const Vector& y) {
    return p.L->apply(solve_spd(p.gram_factor, y));
}

namespace detail {

/// At = A L^+ as a matrix-free operator on z-space.
class PinvComposedOperator final : public LinearOperator {
  public:
    PinvComposedOperator(LinOpPtr a, PinvOperator pinv)
        : LinearOperator(a->rows(), pinv.L->rows(), OpKind::composite),
          a_(std::move(a)),
          pinv_(std::move(pinv)) {}

  protected:
    Vector do_apply(const Vector& v) const override { return a_->apply(pinv_apply(pinv_, v)); }
    Vector do_apply_transpose(const Vector& w) const override {
        return pinv_transpose_apply(pinv_, a_->apply_transpose(w));
    }

  private:
    LinOpPtr a_;
    PinvOperator pinv_;
};

}  // namespace detail

/// Sampling under the transformation prior z = L x: builds the z-space model
/// with operator A L^+, draws z-space samples, and maps each through L^+.
/// Components of the perturbation in null(L^T) are annihilated by L^+, so no
/// pre-projection is needed.
inline SampleBatch sample_transform_prior(const GeneralGaussianModel& model, std::size_t K,
                                          std::uint64_t seed,
                                          Strategy strategy = Strategy::auto_select,
                                          SolverChoice solver = SolverChoice{},
                                          std::size_t workers = 1) {
    model.validate();
    if (!model.transform_prior)
        throw std::invalid_argument("sample_transform_prior: requires a transform prior");
    if (!model.x0.empty() && norm2(model.x0) != 0.0)
        throw std::invalid_argument("sample_transform_prior: nonzero prior mean unsupported");
    PinvOperator pinv = make_pinv(model.transform_prior);

    StandardFormModel zmodel;
    LinOpPtr at = std::make_shared<detail::PinvComposedOperator>(model.op, pinv);
    LinOpPtr s = model.noise_precision_factor;
    zmodel.op = s ? LinOpPtr(std::make_shared<CompositeOperator>(s, at)) : at;
    zmodel.b = s ? s->apply(model.b) : model.b;

    SampleBatch zbatch = sample(zmodel, K, seed, strategy, solver, workers);
    SampleBatch out;
    out.seed = zbatch.seed;
    out.strategy = zbatch.strategy;
    out.per_draw_stats = std::move(zbatch.per_draw_stats);
    out.draws = DenseMatrix(model.n(), K);
    for (std::size_t j = 0; j < K; ++j) out.draws.set_col(j, pinv_apply(pinv, zbatch.draws.col(j)));
    return out;
}

}  // namespace gsplit
