#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "smc/errors.hpp"

namespace smc {

// Deterministic random stream. All sampling goes through hand-rolled
// transforms of raw mt19937_64 output so that runs are bit-reproducible
// across standard library implementations (std::*_distribution is
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; the second variate is discarded to keep the stream
    // position independent of call history.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    // Index in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw DimensionError("Rng::index: empty range");
        // Rejection-free modulo bias is negligible for desk-scale n; use
        // the 53-bit uniform instead to keep draws exactly reproducible.
        auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Draw from non-negative weights by CDF inversion; weights need not
    // be normalized but must have a positive sum.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w))
                throw DimensionError("Rng::categorical: weights must be finite and non-negative");
            total += w;
        }
        if (total <= 0.0)
            throw DimensionError("Rng::categorical: weights sum to zero");
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

    // Independent child stream; splitmix64 over (state sample, tag) so
    // sibling forks never overlap in practice.
    Rng fork(std::uint64_t tag) {
        std::uint64_t x = engine_() + 0x9e3779b97f4a7c15ULL * (tag + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return Rng(x);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace smc
