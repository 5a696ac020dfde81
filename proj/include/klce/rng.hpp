// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace klce {

// Deterministic random source. std::mt19937_64 is bit-exact across
// implementations; the derived uniform/gaussian variates below use fixed
// arithmetic instead of the standard distributions (whose output is
// implementation-defined), so a seed pins the whole stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1), 53 random mantissa bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Fixed-point multiply, no rejection loop.
    std::uint64_t index(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // Standard normal via Box-Muller; consumes two uniforms per call.
    double gaussian() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace klce
