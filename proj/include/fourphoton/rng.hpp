#pragma once

// Deterministic random numbers: PCG32 (XSH-RR variant, 64-bit state) plus a
// Poisson sampler. Same seed, same platform => same byte stream; the standard
// library distributions make no such promise, so sampling is hand-rolled.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fourphoton {

class Pcg32 {
  public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0x14057b7ef767814fULL) {
        inc_ = (stream << 1) | 1u;
        state_ = 0;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18) ^ old) >> 27);
        const auto rot = static_cast<std::uint32_t>(old >> 59);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // 53-bit uniform, strictly inside (0, 1).
    double next_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; one draw per call, the pair partner is discarded.
    double normal() {
        const double u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
    }

  private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 0;
};

namespace detail {

// Knuth's product method; fine below mean ~10.
inline std::uint64_t poisson_small(Pcg32& rng, double mean) {
    const double threshold = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.next_double();
    while (prod > threshold) {
        ++k;
        prod *= rng.next_double();
    }
    return k;
}

// Hormann's PTRS transformed-rejection sampler for mean >= 10.
inline std::uint64_t poisson_ptrs(Pcg32& rng, double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double();
        const double us = 0.5 - std::abs(u);
        const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + static_cast<double>(k) * loglam - std::lgamma(static_cast<double>(k) + 1.0)) {
            return static_cast<std::uint64_t>(k);
        }
    }
}

}  // namespace detail

inline std::uint64_t poisson_sample(Pcg32& rng, double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_sample: mean must be >= 0");
    if (mean == 0.0) return 0;
    return mean < 10.0 ? detail::poisson_small(rng, mean) : detail::poisson_ptrs(rng, mean);
}

}  // namespace fourphoton
