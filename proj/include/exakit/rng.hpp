#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace exakit {

/// Seeded generator with a fully specified output sequence.
///
/// std::mt19937_64 is defined bit-for-bit by the standard; the
/// distributions in <random> are not, so the conversions below are done by
/// hand to keep outputs identical across standard libraries.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [-0.5, 0.5).
    double centered() { return uniform01() - 0.5; }

    /// Exponential with the given mean (> 0).
    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    /// Uniform integer in [0, bound), bound > 0. Uses rejection to avoid bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace exakit
