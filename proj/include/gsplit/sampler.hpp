#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gsplit/bidiag.hpp"
#include "gsplit/factor.hpp"
#include "gsplit/linop.hpp"
#include "gsplit/matrix.hpp"
#include "gsplit/rng.hpp"

namespace gsplit {

/// Whitened model: prior N(0, I_n), noise N(0, I_m). back_transform maps a
/// standard-form draw to original coordinates (identity when absent).
struct StandardFormModel {
    LinOpPtr op;
    Vector b;
    std::function<Vector(const Vector&)> back_transform;  // optional

    std::size_t m() const { return op->rows(); }
    std::size_t n() const { return op->cols(); }
    Vector to_original(const Vector& x) const { return back_transform ? back_transform(x) : x; }
};

enum class SolverKind { direct, krylov };

struct SolverChoice {
    SolverKind kind = SolverKind::direct;
    KrylovConfig krylov;   // used when kind == krylov
    double ridge = 0.0;    // shift for the A A^T system of the splitting step
};

enum class Strategy { auto_select, normal, adjoint, direct_factor };

inline std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::auto_select: return "auto";
        case Strategy::normal: return "normal";
        case Strategy::adjoint: return "adjoint";
        case Strategy::direct_factor: return "direct";
    }
    return "?";
}

/// Per-draw record of the subspace splitting nu = A^T delta + h,
/// x = A^T z + h.
struct SplitDraw {
    Vector eta, nu, delta, h, z, x;
};

struct DrawStats {
    std::size_t index = 0;
    Strategy strategy = Strategy::normal;
    std::size_t solver_steps = 0;
    double residual = 0.0;
    bool converged = true;
};

struct SampleBatch {
    DenseMatrix draws;  // n x K, one draw per column
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::auto_select;
    std::vector<DrawStats> per_draw_stats;
};

/// Closed-form posterior for the standard-form model: mean mu solving
/// (A^T A + I) mu = A^T b, and the Cholesky factor of the posterior
/// precision A^T A + I. Oracle-sized problems only.
inline std::pair<Vector, CholeskyFactor> posterior_direct(const StandardFormModel& model,
                                                          std::size_t cap = 2000) {
    if (model.n() > cap)
        throw std::invalid_argument("posterior_direct: n exceeds dense cap " + std::to_string(cap));
    DenseMatrix p = dense_normal_gram(*model.op);
    for (std::size_t i = 0; i < p.rows; ++i) p(i, i) += 1.0;
    CholeskyFactor f = cholesky_factor(p);
    Vector mu = solve_spd(f, model.op->apply_transpose(model.b));
    return {std::move(mu), std::move(f)};
}

namespace detail {

inline CholeskyFactor factor_normal_system(const LinearOperator& op) {
    DenseMatrix p = dense_normal_gram(op);
    for (std::size_t i = 0; i < p.rows; ++i) p(i, i) += 1.0;
    return cholesky_factor(p);
}

inline CholeskyFactor factor_adjoint_system(const LinearOperator& op, double shift) {
    DenseMatrix g = dense_adjoint_gram(op);
    for (std::size_t i = 0; i < g.rows; ++i) g(i, i) += shift;
    try {
        return cholesky_factor(g);
    } catch (const NotPositiveDefiniteError& e) {
        if (shift == 0.0)
            throw std::runtime_error(
                "split_nu: A A^T is numerically singular (pivot " + std::to_string(e.pivot_index) +
                "); pass a small ridge, e.g. 1e-12 * ||A||^2");
        throw;
    }
}

}  // namespace detail

/// RTO draw through the normal equations: (A^T A + I) x = A^T (b + eta) + nu.
/// The Krylov route solves the equivalent stacked system [A; I] x ~ [b+eta; nu].
inline Vector rto_draw_normal(const StandardFormModel& model, const Vector& eta, const Vector& nu,
                              const SolverChoice& solver, DrawStats* stats = nullptr,
                              const CholeskyFactor* reuse = nullptr) {
    Vector rhs = model.op->apply_transpose(add(model.b, eta));
    axpy(1.0, nu, rhs);
    if (solver.kind == SolverKind::direct) {
        CholeskyFactor local;
        const CholeskyFactor* f = reuse;
        if (!f) {
            local = detail::factor_normal_system(*model.op);
            f = &local;
        }
        return solve_spd(*f, rhs);
    }
    auto stacked = std::make_shared<StackedOperator>(model.op, make_identity_op(model.n()));
    Vector seed = add(model.b, eta);
    seed.insert(seed.end(), nu.begin(), nu.end());
    auto [x, st] = solve_normal_krylov(*stacked, seed, 0.0, solver.krylov);
    if (stats) {
        stats->solver_steps = st.steps;
        stats->residual = st.rel_residual;
        stats->converged = st.converged;
    }
    return x;
}

/// Splits nu = A^T delta + h with h in null(A):
/// (A A^T + ridge I) delta = A nu, h = nu - A^T delta.
inline std::pair<Vector, Vector> split_nu(const StandardFormModel& model, const Vector& nu,
                                          const SolverChoice& solver,
                                          const CholeskyFactor* reuse = nullptr,
                                          DrawStats* stats = nullptr) {
    Vector anu = model.op->apply(nu);
    Vector delta;
    if (solver.kind == SolverKind::direct) {
        CholeskyFactor local;
        const CholeskyFactor* f = reuse;
        if (!f) {
            local = detail::factor_adjoint_system(*model.op, solver.ridge);
            f = &local;
        }
        delta = solve_spd(*f, anu);
    } else {
        if (norm2(anu) == 0.0) {
            delta.assign(model.m(), 0.0);
        } else {
            auto [d, st] = solve_adjoint_krylov(*model.op, anu, solver.ridge, solver.krylov);
            delta = std::move(d);
            if (stats) {
                stats->solver_steps += st.steps;
                stats->residual = std::max(stats->residual, st.rel_residual);
                stats->converged = stats->converged && st.converged;
            }
        }
    }
    Vector h = sub(nu, model.op->apply_transpose(delta));
    return {std::move(delta), std::move(h)};
}

/// Splitting-based RTO draw through the adjoint equations:
/// (A A^T + I) z = b + eta + delta, x = A^T z + h. Requires m < n with A
/// of full row rank.
inline SplitDraw split_draw_adjoint(const StandardFormModel& model, const Vector& eta,
                                    const Vector& nu, const SolverChoice& solver,
                                    DrawStats* stats = nullptr,
                                    const CholeskyFactor* reuse_shifted = nullptr,
                                    const CholeskyFactor* reuse_gram = nullptr) {
    SplitDraw d;
    d.eta = eta;
    d.nu = nu;
    auto [delta, h] = split_nu(model, nu, solver, reuse_gram, stats);
    d.delta = std::move(delta);
    d.h = std::move(h);
    Vector rhs = add(add(model.b, eta), d.delta);
    if (solver.kind == SolverKind::direct) {
        CholeskyFactor local;
        const CholeskyFactor* f = reuse_shifted;
        if (!f) {
            local = detail::factor_adjoint_system(*model.op, 1.0);
            f = &local;
        }
        d.z = solve_spd(*f, rhs);
    } else {
        auto [z, st] = solve_adjoint_krylov(*model.op, rhs, 1.0, solver.krylov);
        d.z = std::move(z);
        if (stats) {
            stats->solver_steps += st.steps;
            stats->residual = std::max(stats->residual, st.rel_residual);
            stats->converged = stats->converged && st.converged;
        }
    }
    d.x = model.op->apply_transpose(d.z);
    axpy(1.0, d.h, d.x);
    return d;
}

/// K independent posterior draws. Perturbations come from per-draw streams
/// (stream id = draw index), nu first then eta, so the normal and adjoint
/// strategies see identical randomness and worker count cannot change the
/// output. Direct strategies factorize once and reuse across all draws.
inline SampleBatch sample(const StandardFormModel& model, std::size_t K, std::uint64_t seed,
                          Strategy strategy = Strategy::auto_select,
                          SolverChoice solver = SolverChoice{}, std::size_t workers = 1) {
    if (K < 1) throw std::invalid_argument("sample: K must be >= 1");
    Strategy eff = strategy;
    if (eff == Strategy::auto_select)
        eff = model.m() < model.n() ? Strategy::adjoint : Strategy::normal;
    if (eff == Strategy::direct_factor) {
        // explicit request for the dense factorization path
        if (std::min(model.m(), model.n()) > 2000)
            throw std::invalid_argument("sample: direct strategy exceeds the dense cap");
        eff = model.m() < model.n() ? Strategy::adjoint : Strategy::normal;
        solver.kind = SolverKind::direct;
    }

    std::optional<CholeskyFactor> normal_factor, adj_shifted, adj_gram;
    std::optional<DenseMatrix> adj_rows;  // A^T materialized column-by-column (n x m)
    if (solver.kind == SolverKind::direct) {
        if (eff == Strategy::normal) {
            normal_factor = detail::factor_normal_system(*model.op);
        } else {
            adj_shifted = detail::factor_adjoint_system(*model.op, 1.0);
            adj_gram = detail::factor_adjoint_system(*model.op, solver.ridge);
            DenseMatrix at(model.n(), model.m());
            Vector e(model.m(), 0.0);
            for (std::size_t i = 0; i < model.m(); ++i) {
                e[i] = 1.0;
                at.set_col(i, model.op->apply_transpose(e));
                e[i] = 0.0;
            }
            adj_rows = std::move(at);
        }
    }

    SampleBatch batch;
    batch.draws = DenseMatrix(model.n(), K);
    batch.seed = seed;
    batch.strategy = strategy;
    batch.per_draw_stats.resize(K);

    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
            Rng rng(seed, j);
            Vector nu = rng.normal_vector(model.n());
            Vector eta = rng.normal_vector(model.m());
            DrawStats& st = batch.per_draw_stats[j];
            st.index = j;
            st.strategy = eff;
            Vector x;
            if (eff == Strategy::normal) {
                x = rto_draw_normal(model, eta, nu, solver, &st,
                                    normal_factor ? &*normal_factor : nullptr);
            } else if (adj_rows) {
                // fast path: two cached matrix-vector products per draw, and
                // x = A^T (z - delta) + nu folds the null-space part back in
                Vector delta = solve_spd(*adj_gram, matvec_transpose(*adj_rows, nu));
                Vector rhs = add(add(model.b, eta), delta);
                Vector z = solve_spd(*adj_shifted, rhs);
                axpy(-1.0, delta, z);
                x = matvec(*adj_rows, z);
                axpy(1.0, nu, x);
            } else {
                SplitDraw d = split_draw_adjoint(model, eta, nu, solver, &st,
                                                 adj_shifted ? &*adj_shifted : nullptr,
                                                 adj_gram ? &*adj_gram : nullptr);
                x = std::move(d.x);
            }
            batch.draws.set_col(j, x);
        }
    };

    if (workers <= 1 || K < 2) {
        run_range(0, K);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (K + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            std::size_t lo = w * chunk, hi = std::min(K, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    return batch;
}

}  // namespace gsplit
