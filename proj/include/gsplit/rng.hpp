#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "gsplit/matrix.hpp"

namespace gsplit {

/// Deterministic random stream. Identical (seed, stream_id) pairs replay the
/// identical sequence bit for bit; distinct stream ids give independent
/// streams. Normal variates use explicit Box-Muller so the sequence does not
/// depend on library internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id) {
        std::seed_seq seq{seed, stream_id, std::uint64_t(0x9e3779b97f4a7c15ULL)};
        gen_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    /// Uniform on [0, 1).
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    Vector normal_vector(std::size_t n) {
        Vector v(n);
        for (double& x : v) x = normal();
        return v;
    }

  private:
    std::uint64_t seed_, stream_;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gsplit
