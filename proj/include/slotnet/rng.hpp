#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "slotnet/common.hpp"

namespace slotnet {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministically derives a child seed from a root seed and a path of
/// stream tags. Used to give every (generation, candidate, episode, ...)
/// its own independent stream so results cannot depend on evaluation order
/// or worker count.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = root;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t p : path) {
        s = out ^ (p + 0x9e3779b97f4a7c15ULL);
        out = splitmix64(s);
    }
    return out;
}

/// Deterministic random stream. Uniform and normal draws are implemented
/// explicitly (rather than via std:: distributions, whose output is
/// implementation-defined) so identical seeds give identical streams on any
/// standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, so no modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        require(n > 0, "uniform_int: n must be positive");
        if (n == 1) return 0;
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        for (;;) {
            std::uint64_t v = engine_();
            if (v <= limit) return v % n;
        }
    }

    /// Standard normal via Box-Muller (cosine branch).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace slotnet
