#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gsplit/sampler.hpp"

namespace gsplit {

/// Target density proportional to N(gbar, C) * exp(-phi), where C is the
/// covariance implied by the reference model's standard-form operator:
/// draws w ~ N(0, C) come from the RTO sampler with zero data. When the
/// reference model carries a back transform it must be linear (no offset).
struct PcnTarget {
    Vector gbar;
    StandardFormModel reference;
    std::function<double(const Vector&)> phi;
    double h = 0.1;

    void validate() const {
        if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("pcn: h must be in (0, 1)");
        if (!phi) throw std::invalid_argument("pcn: missing phi");
    }
};

struct PcnStep {
    Vector next;
    bool accepted = false;
    double phi_value = 0.0;  // phi at next
};

struct PcnChain {
    std::vector<Vector> states;  // initial state followed by N chain states
    std::size_t accept_count = 0;
    std::uint64_t seed = 0;

    double acceptance_rate() const {
        return states.size() > 1 ? double(accept_count) / double(states.size() - 1) : 0.0;
    }
};

/// Zero-mean reference draw: the RTO system with b = 0 gives
/// x = (A^T A + I)^{-1} (A^T eta + nu) ~ N(0, (A^T A + I)^{-1}) in standard
/// coordinates, mapped through the model's back transform when present.
inline Vector pcn_proposal_draw(const StandardFormModel& model, Rng& rng,
                                const SolverChoice& solver = SolverChoice{},
                                const CholeskyFactor* reuse = nullptr) {
    Vector nu = rng.normal_vector(model.n());
    Vector eta = rng.normal_vector(model.m());
    StandardFormModel zero = model;
    zero.b.assign(model.m(), 0.0);
    Vector x = rto_draw_normal(zero, eta, nu, solver, nullptr, reuse);
    return model.to_original(x);
}

/// One pCN move: proposal gbar + sqrt(1-h^2)(current - gbar) + h w, accepted
/// with probability min(1, exp(-phi(prop) + phi(current))). The uniform draw
/// is consumed on every path so RNG alignment is independent of phi.
/// Non-finite phi at the proposal rejects.
inline PcnStep pcn_step(const Vector& current, const Vector& gbar, const Vector& w, double h,
                        const std::function<double(const Vector&)>& phi, Rng& rng,
                        std::optional<double> phi_current = std::nullopt) {
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("pcn_step: h must be in (0, 1)");
    const double keep = std::sqrt(1.0 - h * h);
    Vector prop(gbar);
    for (std::size_t i = 0; i < prop.size(); ++i)
        prop[i] += keep * (current[i] - gbar[i]) + h * w[i];

    double phi_cur = phi_current ? *phi_current : phi(current);
    double phi_prop = phi(prop);
    double u = rng.uniform();
    PcnStep step;
    if (std::isfinite(phi_prop) && u < std::exp(-phi_prop + phi_cur)) {
        step.next = std::move(prop);
        step.accepted = true;
        step.phi_value = phi_prop;
    } else {
        step.next = current;
        step.phi_value = phi_cur;
    }
    return step;
}

/// N pCN steps from x0. Step k draws its proposal from stream 2k and its
/// acceptance uniform from stream 2k+1, so pre-generated proposal batches
/// and streamed proposals give bit-identical chains.
inline PcnChain pcn_chain(const PcnTarget& target, const Vector& x0, std::size_t N,
                          std::uint64_t seed, const SolverChoice& solver = SolverChoice{}) {
    target.validate();
    if (N < 1) throw std::invalid_argument("pcn_chain: N must be >= 1");

    std::optional<CholeskyFactor> factor;
    if (solver.kind == SolverKind::direct)
        factor = detail::factor_normal_system(*target.reference.op);

    PcnChain chain;
    chain.seed = seed;
    chain.states.reserve(N + 1);
    chain.states.push_back(x0);
    Vector current = x0;
    double phi_cur = target.phi(current);
    for (std::size_t k = 0; k < N; ++k) {
        Rng prop_rng(seed, 2 * k);
        Vector w = pcn_proposal_draw(target.reference, prop_rng, solver,
                                     factor ? &*factor : nullptr);
        Rng acc_rng(seed, 2 * k + 1);
        PcnStep step = pcn_step(current, target.gbar, w, target.h, target.phi, acc_rng, phi_cur);
        current = step.next;
        phi_cur = step.phi_value;
        if (step.accepted) ++chain.accept_count;
        chain.states.push_back(current);
    }
    return chain;
}

}  // namespace gsplit
