#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ofo {

/// Seeded random stream with explicit draw algorithms. The uniform and
/// gaussian transforms are spelled out here (rather than delegating to
/// std::*_distribution, whose output sequences are implementation-defined)
/// so that seeded runs reproduce bit-identically across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller on (0,1] x [0,1) uniforms.
    double gaussian() {
        const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace ofo
