#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsplit/factor.hpp"
#include "gsplit/linop.hpp"
#include "gsplit/matrix.hpp"

namespace gsplit {

enum class Reorth { full, none };

struct KrylovConfig {
    std::size_t max_steps = 50;
    double tol = 1e-10;
    Reorth reorth = Reorth::full;

    void validate() const {
        if (max_steps < 1) throw std::invalid_argument("KrylovConfig: max_steps must be >= 1");
        if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("KrylovConfig: tol must be in (0,1)");
    }
};

struct KrylovStats {
    std::size_t steps = 0;
    double rel_residual = 0.0;
    bool converged = false;
    bool breakdown = false;

    std::string csv_row() const {
        return std::to_string(steps) + "," + std::to_string(rel_residual) + "," +
               (converged ? "1" : "0") + "," + (breakdown ? "1" : "0");
    }
};

/// Lanczos triplet (U, B, V): A V = U B and A^T U = V B^T + alpha_{l+1} v e^T.
/// alphas holds alpha_1..alpha_l, betas holds beta_1..beta_{l+1};
/// beta_1 u^(1) = b. U is m x (l+1), V is n x l.
struct BidiagFactors {
    DenseMatrix U;
    DenseMatrix V;
    Vector alphas;
    Vector betas;
    bool breakdown = false;
    std::size_t steps = 0;
};

namespace detail {

/// Incremental Golub-Kahan recurrence. us holds beta-normalized left vectors,
/// vs the alpha-normalized right vectors.
class GkProcess {
  public:
    GkProcess(const LinearOperator& op, const Vector& b, Reorth reorth)
        : op_(op), reorth_(reorth) {
        if (b.size() != op.rows()) throw std::invalid_argument("golub_kahan: seed length mismatch");
        double beta1 = norm2(b);
        if (beta1 == 0.0) throw std::invalid_argument("golub_kahan: zero seed vector");
        breakdown_tol_ = 1e-14 * beta1;
        Vector u(b);
        scale(u, 1.0 / beta1);
        us_.push_back(std::move(u));
        betas_.push_back(beta1);
        Vector v = op_.apply_transpose(us_[0]);
        double alpha1 = norm2(v);
        if (alpha1 <= breakdown_tol_) {
            breakdown_ = true;
            alpha1 = 0.0;
        } else {
            scale(v, 1.0 / alpha1);
            vs_.push_back(std::move(v));
        }
        alphas_.push_back(alpha1);
    }

    std::size_t n_v() const { return vs_.size(); }
    std::size_t n_u() const { return us_.size(); }
    bool breakdown() const { return breakdown_; }
    const std::vector<Vector>& us() const { return us_; }
    const std::vector<Vector>& vs() const { return vs_; }
    const Vector& alphas() const { return alphas_; }
    const Vector& betas() const { return betas_; }

    // u_{k+1} from A v_k - alpha_k u_k; valid when n_u == n_v
    bool advance_u() {
        if (breakdown_) return false;
        Vector u = op_.apply(vs_.back());
        axpy(-alphas_.back(), us_.back(), u);
        reorthogonalize(u, us_);
        double beta = norm2(u);
        if (beta <= breakdown_tol_) {
            breakdown_ = true;
            betas_.push_back(0.0);
            return false;
        }
        scale(u, 1.0 / beta);
        us_.push_back(std::move(u));
        betas_.push_back(beta);
        return true;
    }

    // v_{k+1} from A^T u_{k+1} - beta_{k+1} v_k; valid when n_u == n_v + 1
    bool advance_v() {
        if (breakdown_) return false;
        Vector v = op_.apply_transpose(us_.back());
        axpy(-betas_.back(), vs_.back(), v);
        reorthogonalize(v, vs_);
        double alpha = norm2(v);
        if (alpha <= breakdown_tol_) {
            breakdown_ = true;
            alphas_.push_back(0.0);
            return false;
        }
        scale(v, 1.0 / alpha);
        vs_.push_back(std::move(v));
        alphas_.push_back(alpha);
        return true;
    }

  private:
    void reorthogonalize(Vector& w, const std::vector<Vector>& basis) {
        if (reorth_ != Reorth::full) return;
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : basis) axpy(-dot(q, w), q, w);
    }

    const LinearOperator& op_;
    Reorth reorth_;
    std::vector<Vector> us_, vs_;
    Vector alphas_, betas_;
    double breakdown_tol_ = 0.0;
    bool breakdown_ = false;
};

inline DenseMatrix columns_to_matrix(const std::vector<Vector>& cols, std::size_t rows,
                                     std::size_t ncols) {
    DenseMatrix m(rows, ncols);
    for (std::size_t j = 0; j < ncols && j < cols.size(); ++j) m.set_col(j, cols[j]);
    return m;  // missing trailing columns stay zero (breakdown truncation)
}

}  // namespace detail

inline BidiagFactors golub_kahan(const LinearOperator& op, const Vector& b, std::size_t steps,
                                 Reorth reorth = Reorth::full) {
    if (steps < 1 || steps >= std::min(op.rows(), op.cols()))
        throw std::invalid_argument("golub_kahan: steps out of range (need 1 <= steps < min(m,n))");
    detail::GkProcess gk(op, b, reorth);
    while (!gk.breakdown() && gk.n_v() < steps) {
        if (!gk.advance_u()) break;
        if (gk.n_v() < steps) gk.advance_v();
    }
    if (!gk.breakdown() && gk.n_u() == gk.n_v()) gk.advance_u();

    BidiagFactors f;
    f.steps = gk.n_v();
    f.breakdown = gk.breakdown();
    f.alphas = Vector(gk.alphas().begin(), gk.alphas().begin() + f.steps);
    f.betas = gk.betas();
    f.betas.resize(f.steps + 1, 0.0);
    f.U = detail::columns_to_matrix(gk.us(), op.rows(), f.steps + 1);
    f.V = detail::columns_to_matrix(gk.vs(), op.cols(), f.steps);
    return f;
}

namespace detail {

// Stacked projected least squares: minimize ||M xi - r1 e1||^2 + (coupling * xi_l)^2.
// Returns (xi, residual).
inline std::pair<Vector, double> solve_projected(const DenseMatrix& m, double r1, double coupling) {
    const std::size_t l = m.cols;
    DenseMatrix s(l + 1, l);
    for (std::size_t j = 0; j < l; ++j)
        for (std::size_t i = 0; i < l; ++i) s(i, j) = m(i, j);
    s(l, l - 1) = coupling;
    Vector rhs(l + 1, 0.0);
    rhs[0] = r1;
    Vector xi = dense_lstsq(s, rhs);
    Vector res = matvec(s, xi);
    axpy(-1.0, rhs, res);
    return {std::move(xi), norm2(res)};
}

}  // namespace detail

/// Approximate solution of (A A^T + mu I) z = b in the left Krylov space,
/// z = U_l xi. Stops when the projected residual relative to ||b|| drops
/// below cfg.tol.
inline std::pair<Vector, KrylovStats> solve_adjoint_krylov(const LinearOperator& op, const Vector& b,
                                                           double mu, const KrylovConfig& cfg) {
    cfg.validate();
    if (mu < 0.0) throw std::invalid_argument("solve_adjoint_krylov: mu must be >= 0");
    detail::GkProcess gk(op, b, cfg.reorth);
    const double beta1 = gk.betas()[0];
    const std::size_t cap = std::min({cfg.max_steps, op.rows(), op.cols()});

    Vector best_xi;
    KrylovStats stats;
    for (std::size_t l = 1; l <= cap; ++l) {
        if (l > 1 && gk.n_v() < l) break;  // breakdown before reaching l
        if (gk.n_u() < l + 1) gk.advance_u();
        const Vector& alphas = gk.alphas();
        const Vector& betas = gk.betas();
        // C_l = B_l without its last row: lower bidiagonal l x l
        DenseMatrix c(l, l);
        for (std::size_t j = 0; j < l; ++j) {
            c(j, j) = alphas[j];
            if (j + 1 < l) c(j + 1, j) = betas[j + 1];
        }
        DenseMatrix m = gram(transpose(c));  // C C^T
        for (std::size_t i = 0; i < l; ++i) m(i, i) += mu;
        double beta_next = (betas.size() > l) ? betas[l] : 0.0;
        auto [xi, resid] = detail::solve_projected(m, beta1, beta_next * alphas[l - 1]);
        best_xi = std::move(xi);
        stats.steps = l;
        stats.rel_residual = resid / beta1;
        stats.breakdown = gk.breakdown();
        if (stats.rel_residual <= cfg.tol || gk.breakdown()) {
            stats.converged = stats.rel_residual <= cfg.tol;
            break;
        }
        if (l < cap) gk.advance_v();
    }
    stats.converged = stats.rel_residual <= cfg.tol;

    Vector z(op.rows(), 0.0);
    for (std::size_t j = 0; j < stats.steps; ++j) axpy(best_xi[j], gk.us()[j], z);
    return {std::move(z), stats};
}

/// Approximate solution of (A^T A + mu I) x = A^T b in the right Krylov
/// space, x = V_l zeta.
inline std::pair<Vector, KrylovStats> solve_normal_krylov(const LinearOperator& op, const Vector& b,
                                                          double mu, const KrylovConfig& cfg) {
    cfg.validate();
    if (mu < 0.0) throw std::invalid_argument("solve_normal_krylov: mu must be >= 0");
    detail::GkProcess gk(op, b, cfg.reorth);
    const double beta1 = gk.betas()[0];
    const double rhs_scale = gk.alphas()[0] * beta1;  // ||A^T b||
    const std::size_t cap = std::min({cfg.max_steps, op.rows(), op.cols()});

    Vector best_zeta;
    KrylovStats stats;
    if (rhs_scale == 0.0) {  // A^T b = 0, solution is zero
        stats.converged = true;
        stats.breakdown = true;
        return {Vector(op.cols(), 0.0), stats};
    }
    for (std::size_t l = 1; l <= cap; ++l) {
        if (gk.n_v() < l) break;
        if (gk.n_u() < l + 1) gk.advance_u();
        if (!gk.breakdown() && gk.n_v() < l + 1) gk.advance_v();
        const Vector& alphas = gk.alphas();
        const Vector& betas = gk.betas();
        // B_l is (l+1) x l
        DenseMatrix bm(l + 1, l);
        for (std::size_t j = 0; j < l; ++j) {
            bm(j, j) = alphas[j];
            if (j + 1 <= l && betas.size() > j + 1) bm(j + 1, j) = betas[j + 1];
        }
        DenseMatrix m = gram(bm);  // B^T B
        for (std::size_t i = 0; i < l; ++i) m(i, i) += mu;
        double alpha_next = (alphas.size() > l) ? alphas[l] : 0.0;
        double beta_next = (betas.size() > l) ? betas[l] : 0.0;
        auto [zeta, resid] = detail::solve_projected(m, rhs_scale, alpha_next * beta_next);
        best_zeta = std::move(zeta);
        stats.steps = l;
        stats.rel_residual = resid / rhs_scale;
        stats.breakdown = gk.breakdown();
        if (stats.rel_residual <= cfg.tol || gk.breakdown()) break;
    }
    stats.converged = stats.rel_residual <= cfg.tol;

    Vector x(op.cols(), 0.0);
    for (std::size_t j = 0; j < stats.steps; ++j) axpy(best_zeta[j], gk.vs()[j], x);
    return {std::move(x), stats};
}

}  // namespace gsplit
