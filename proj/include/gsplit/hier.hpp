#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gsplit/sampler.hpp"

namespace gsplit {

/// Conditionally Gaussian block model: b = sum_l L^l x^l + noise(sigma^2 I),
/// x^l | theta_l ~ N(0, theta_l I), theta_l ~ InvGamma(beta, vartheta_l).
struct BlockModel {
    std::vector<LinOpPtr> blocks;  // each m x n_l
    Vector b;
    double sigma = 1.0;
    double beta = 1.0;
    Vector vartheta;

    std::size_t m() const { return b.size(); }
    std::size_t n() const {
        std::size_t total = 0;
        for (const auto& blk : blocks) total += blk->cols();
        return total;
    }
    std::size_t num_blocks() const { return blocks.size(); }

    void validate() const {
        if (blocks.empty()) throw std::invalid_argument("block model: no blocks");
        if (vartheta.size() != blocks.size())
            throw std::invalid_argument("block model: vartheta size mismatch");
        if (sigma <= 0.0 || beta <= 0.0)
            throw std::invalid_argument("block model: sigma and beta must be positive");
        for (double v : vartheta)
            if (v <= 0.0) throw std::invalid_argument("block model: vartheta must be positive");
        for (const auto& blk : blocks)
            if (blk->rows() != m()) throw std::invalid_argument("block model: block row mismatch");
    }
};

struct HierState {
    Vector x;
    Vector theta;
};

namespace detail {

/// [s_1 L^1 | ... | s_L L^L] with per-block column scalings.
class ScaledBlockOperator final : public LinearOperator {
  public:
    ScaledBlockOperator(std::vector<LinOpPtr> blocks, Vector scales)
        : LinearOperator(blocks.front()->rows(), total_cols(blocks), OpKind::composite),
          blocks_(std::move(blocks)),
          scales_(std::move(scales)) {}

  protected:
    Vector do_apply(const Vector& v) const override {
        Vector out(rows(), 0.0);
        std::size_t off = 0;
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            Vector xl(v.begin() + off, v.begin() + off + blocks_[l]->cols());
            axpy(scales_[l], blocks_[l]->apply(xl), out);
            off += blocks_[l]->cols();
        }
        return out;
    }
    Vector do_apply_transpose(const Vector& w) const override {
        Vector out(cols());
        std::size_t off = 0;
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            Vector t = blocks_[l]->apply_transpose(w);
            for (std::size_t i = 0; i < t.size(); ++i) out[off + i] = scales_[l] * t[i];
            off += t.size();
        }
        return out;
    }

  private:
    static std::size_t total_cols(const std::vector<LinOpPtr>& blocks) {
        std::size_t n = 0;
        for (const auto& blk : blocks) n += blk->cols();
        return n;
    }

    std::vector<LinOpPtr> blocks_;
    Vector scales_;
};

/// Standard-form model for x | theta after the substitution x^l = sqrt(theta_l) xt^l.
inline StandardFormModel theta_scaled_model(const BlockModel& model, const Vector& theta) {
    Vector scales(theta.size());
    for (std::size_t l = 0; l < theta.size(); ++l) {
        if (theta[l] <= 0.0) throw std::invalid_argument("theta must be positive");
        scales[l] = std::sqrt(theta[l]) / model.sigma;
    }
    StandardFormModel out;
    out.op = std::make_shared<ScaledBlockOperator>(model.blocks, std::move(scales));
    out.b = model.b;
    scale(out.b, 1.0 / model.sigma);
    return out;
}

inline Vector unscale_blocks(const BlockModel& model, const Vector& theta, Vector xt) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < theta.size(); ++l) {
        double s = std::sqrt(theta[l]);
        for (std::size_t i = 0; i < model.blocks[l]->cols(); ++i) xt[off + i] *= s;
        off += model.blocks[l]->cols();
    }
    return xt;
}

inline double block_sqnorm(const BlockModel& model, const Vector& x, std::size_t l) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < l; ++k) off += model.blocks[k]->cols();
    double s = 0.0;
    for (std::size_t i = 0; i < model.blocks[l]->cols(); ++i) s += x[off + i] * x[off + i];
    return s;
}

}  // namespace detail

/// Minimizer of (1/2 sigma^2)||b - sum_l L^l x^l||^2 + (1/2) sum_l ||x^l||^2 / theta_l,
/// computed as the unperturbed draw of the theta-scaled standard-form model.
inline Vector ias_x_update(const BlockModel& model, const Vector& theta) {
    model.validate();
    StandardFormModel scaled = detail::theta_scaled_model(model, theta);
    Vector xt = rto_draw_normal(scaled, Vector(model.m(), 0.0), Vector(model.n(), 0.0),
                                SolverChoice{});
    return detail::unscale_blocks(model, theta, std::move(xt));
}

/// Closed-form hypervariance update theta_l = (||x^l||^2/2 + vartheta_l) / kappa_l
/// with kappa_l = beta + 1 + n_l/2.
inline Vector ias_theta_update(const Vector& x, const BlockModel& model) {
    Vector theta(model.num_blocks());
    for (std::size_t l = 0; l < theta.size(); ++l) {
        double kappa = model.beta + 1.0 + 0.5 * static_cast<double>(model.blocks[l]->cols());
        theta[l] = (0.5 * detail::block_sqnorm(model, x, l) + model.vartheta[l]) / kappa;
    }
    return theta;
}

/// Negative log posterior of (x, theta) up to an additive constant.
inline double hier_objective(const BlockModel& model, const HierState& state) {
    Vector r = state.x.empty() ? model.b : sub(model.b, [&] {
        Vector ax(model.m(), 0.0);
        std::size_t off = 0;
        for (const auto& blk : model.blocks) {
            Vector xl(state.x.begin() + off, state.x.begin() + off + blk->cols());
            axpy(1.0, blk->apply(xl), ax);
            off += blk->cols();
        }
        return ax;
    }());
    double obj = 0.5 * dot(r, r) / (model.sigma * model.sigma);
    for (std::size_t l = 0; l < model.num_blocks(); ++l) {
        double nl = static_cast<double>(model.blocks[l]->cols());
        double th = state.theta[l];
        obj += 0.5 * detail::block_sqnorm(model, state.x, l) / th +
               (model.beta + 1.0 + 0.5 * nl) * std::log(th) + model.vartheta[l] / th;
    }
    return obj;
}

struct IasResult {
    HierState state;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> objective_trace;
};

/// Alternating MAP optimization: x-update (Gaussian least squares) and
/// theta-update (closed form) from theta = vartheta until the relative change
/// of the stacked (x, theta) falls below tol.
inline IasResult ias_map(const BlockModel& model, double tol = 1e-6, std::size_t max_iter = 200) {
    model.validate();
    IasResult res;
    res.state.theta = model.vartheta;
    res.state.x = Vector(model.n(), 0.0);
    for (std::size_t it = 0; it < max_iter; ++it) {
        Vector x_new = ias_x_update(model, res.state.theta);
        Vector theta_new = ias_theta_update(x_new, model);

        double change = 0.0, scale_sq = 0.0;
        for (std::size_t i = 0; i < x_new.size(); ++i) {
            double d = x_new[i] - res.state.x[i];
            change += d * d;
            scale_sq += x_new[i] * x_new[i];
        }
        for (std::size_t l = 0; l < theta_new.size(); ++l) {
            double d = theta_new[l] - res.state.theta[l];
            change += d * d;
            scale_sq += theta_new[l] * theta_new[l];
        }

        double prev_obj = res.objective_trace.empty() ? INFINITY : res.objective_trace.back();
        res.state.x = std::move(x_new);
        res.state.theta = std::move(theta_new);
        res.iterations = it + 1;
        double obj = hier_objective(model, res.state);
        if (obj > prev_obj + 1e-10 * std::abs(prev_obj))
            throw std::logic_error("ias_map: objective increased");
        res.objective_trace.push_back(obj);

        if (std::sqrt(change) <= tol * std::max(std::sqrt(scale_sq), 1e-300)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Draw from density proportional to t^{-shape-1} exp(-scale/t) as the
/// reciprocal of a Gamma(shape) variate (Marsaglia-Tsang rejection).
inline double draw_inverse_gamma(double shape, double scale_param, Rng& rng) {
    if (shape <= 0.0 || scale_param <= 0.0)
        throw std::invalid_argument("draw_inverse_gamma: parameters must be positive");
    double a = shape;
    double boost = 1.0;
    if (a < 1.0) {
        // Gamma(a) = Gamma(a+1) * U^{1/a}
        boost = std::pow(rng.uniform(), 1.0 / a);
        a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    double g;
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x || std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            g = d * v * boost;
            break;
        }
    }
    return scale_param / g;
}

/// Block-Gibbs chain: x | theta via a fresh RTO draw on the theta-scaled
/// model (the system matrix changes every sweep, so nothing is reused),
/// then theta_l | x ~ InvGamma(beta + n_l/2, vartheta_l + ||x^l||^2/2).
/// Stream layout: sweep t uses stream 2t for the x perturbations and 2t+1
/// for the hypervariance draws.
inline std::vector<HierState> gibbs_sample(const BlockModel& model, std::size_t T,
                                           std::uint64_t seed) {
    model.validate();
    if (T < 1) throw std::invalid_argument("gibbs_sample: T must be >= 1");
    std::vector<HierState> chain;
    chain.reserve(T);
    Vector theta = model.vartheta;
    for (std::size_t t = 0; t < T; ++t) {
        StandardFormModel scaled = detail::theta_scaled_model(model, theta);
        Rng xrng(seed, 2 * t);
        Vector nu = xrng.normal_vector(model.n());
        Vector eta = xrng.normal_vector(model.m());
        Vector x = detail::unscale_blocks(model, theta,
                                          rto_draw_normal(scaled, eta, nu, SolverChoice{}));
        Rng trng(seed, 2 * t + 1);
        for (std::size_t l = 0; l < theta.size(); ++l) {
            double shape = model.beta + 0.5 * static_cast<double>(model.blocks[l]->cols());
            double sc = model.vartheta[l] + 0.5 * detail::block_sqnorm(model, x, l);
            theta[l] = draw_inverse_gamma(shape, sc, trng);
        }
        chain.push_back(HierState{std::move(x), theta});
    }
    return chain;
}

}  // namespace gsplit
