#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace uhcm {

/// Counter-style 64-bit generator (splitmix64). Cheap to seed, which matters
/// here: the simulator derives a fresh stream per shot so that results are
/// independent of how shots are partitioned across workers.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Derives an independent stream from (seed, tag, index) by running the
    /// mixer over the concatenated words.
    static SplitMix64 derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
        SplitMix64 g(seed);
        std::uint64_t a = g();
        g.state_ = a ^ (tag * 0xD1B54A32D192ED03ULL);
        std::uint64_t b = g();
        g.state_ = b ^ (index * 0x8CB92BA72F3D8DD7ULL);
        g();
        return g;
    }

  private:
    std::uint64_t state_;
};

/// Uniform double in [0, 1) with 53-bit resolution.
inline double uniform01(SplitMix64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Standard normal deviate (Box-Muller; one value per call).
inline double standard_normal(SplitMix64& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Gaussian with the given mean/sd, redrawn until nonnegative. Used for the
/// reference-beam amplitude jitter, which models a fluctuating field strength.
inline double truncated_normal_nonneg(SplitMix64& g, double mean, double sd) {
    if (sd <= 0.0) return mean;
    for (;;) {
        const double x = mean + sd * standard_normal(g);
        if (x >= 0.0) return x;
    }
}

/// Exact Poisson sampling. Knuth's product method for small means, Hormann's
/// PTRS transformed rejection for large ones (no normal approximation, so
/// estimator means stay unbiased).
inline std::int64_t poisson(SplitMix64& g, double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 10.0) {
        const double limit = std::exp(-lambda);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01(g);
        } while (p > limit);
        return k - 1;
    }
    // PTRS (W. Hormann, "The transformed rejection method for generating
    // Poisson random variables").
    const double slam = std::sqrt(lambda);
    const double llam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform01(g) - 0.5;
        const double v = uniform01(g);
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * llam - lambda - std::lgamma(k + 1.0)) {
            return static_cast<std::int64_t>(k);
        }
    }
}

}  // namespace uhcm
