#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcr {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

/// Thrown on malformed input files, bad configs, or contract violations.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& message) : std::runtime_error(message) {}
};

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

/// splitmix64 step; used to derive independent sub-stream seeds so that
/// e.g. redrawing confounder categories never shifts the feature noise.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// mt19937_64 engine with hand-rolled samplers. The standard pins the engine
/// output exactly but leaves distributions implementation-defined, so every
/// sampler here is spelled out to keep logs and checkpoints byte-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0,1], keeps log() finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Unbiased integer in [0,n) by rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw InvalidInput("uniform_int: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t u = engine_();
        while (u >= limit) u = engine_();
        return u % n;
    }

    /// Index draw from an (unnormalized is fine) probability vector by CDF inversion.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        const double u = uniform() * total;
        double cdf = 0.0;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            cdf += weights[k];
            if (u < cdf) return k;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[static_cast<std::size_t>(uniform_int(i))]);
        }
    }

    /// k distinct indices from [0,n), partial Fisher-Yates, order preserved.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
        if (k > n) throw InvalidInput("sample_without_replacement: k exceeds population");
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::uint32_t>(uniform_int(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace hcr
