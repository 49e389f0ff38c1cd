#pragma once

// Seeded random streams with portable, hand-rolled distributions.
//
// std::*_distribution output is implementation-defined, so sampling is done
// here on top of std::mt19937_64 (whose output sequence is fixed by the
// standard). Same seed => same draws on every toolchain.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace skelaug {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed for an independent stream keyed by (master seed, sample id).
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view id) {
    return splitmix64(splitmix64(master) ^ fnv1a64(id));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    // Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 via the boost U^(1/shape).
    double gamma(double shape) {
        if (shape < 1.0) {
            double u;
            do {
                u = uniform();
            } while (u <= 0.0);
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Beta(a, b). Johnk's method when both shapes are below 1 (high acceptance
    // there, and done in log space so tiny shapes do not underflow);
    // gamma ratio otherwise.
    double beta(double a, double b) {
        if (a < 1.0 && b < 1.0) {
            for (;;) {
                double u, v;
                do {
                    u = uniform();
                } while (u <= 0.0);
                do {
                    v = uniform();
                } while (v <= 0.0);
                const double log_x = std::log(u) / a;
                const double log_y = std::log(v) / b;
                const double m = std::max(log_x, log_y);
                const double log_sum = m + std::log(std::exp(log_x - m) + std::exp(log_y - m));
                if (log_sum <= 0.0) return std::exp(log_x - log_sum);
            }
        }
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace skelaug
