#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace riq {

// Deterministic generator used everywhere randomness is needed. Gaussian
// draws go through an explicit Box-Muller transform instead of
// std::normal_distribution so that a given seed yields the same stream on
// every platform and standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 gen_;
};

} // namespace riq
