#include "exakit/precision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace exakit {

std::string_view to_string(PrecisionTag p) {
    switch (p) {
        case PrecisionTag::FP64: return "FP64";
        case PrecisionTag::FP32: return "FP32";
        case PrecisionTag::BF16: return "BF16";
    }
    return "?";
}

float Bf16::to_float() const {
    return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
}

namespace {

constexpr int kMinNormalExp = -126;
constexpr int kMantissaBits = 7;

std::uint16_t high_half(float f) {
    return static_cast<std::uint16_t>(std::bit_cast<std::uint32_t>(f) >> 16);
}

}  // namespace

Bf16 round_to_bf16(double x) {
    const std::uint16_t sign = std::signbit(x) ? 0x8000u : 0u;
    if (std::isnan(x)) return Bf16::from_bits(static_cast<std::uint16_t>(sign | 0x7FC0u));
    if (std::isinf(x)) return Bf16::from_bits(static_cast<std::uint16_t>(sign | 0x7F80u));
    if (x == 0.0) return Bf16::from_bits(sign);

    const double mag = std::fabs(x);
    // Spacing of BF16 values in the binade of |x|; subnormals share the
    // spacing of the smallest normal binade.
    const int exponent = std::max(std::ilogb(mag), kMinNormalExp);
    const double quantum = std::ldexp(1.0, exponent - kMantissaBits);
    // mag / quantum is exact (power-of-two scaling) and below 2^9, so the
    // split into integer and fractional parts is exact too.
    const double scaled = mag / quantum;
    double steps = std::floor(scaled);
    const double frac = scaled - steps;
    if (frac > 0.5 || (frac == 0.5 && std::fmod(steps, 2.0) != 0.0)) steps += 1.0;
    const double rounded = steps * quantum;

    constexpr double kMaxFinite = 0x1.FEp127;  // 0x7F7F
    if (rounded > kMaxFinite) return Bf16::from_bits(static_cast<std::uint16_t>(sign | 0x7F80u));
    // rounded has at most 8 significant bits and fits FP32 exactly, so the
    // low 16 bits of its FP32 encoding are zero.
    return Bf16::from_bits(static_cast<std::uint16_t>(sign | high_half(static_cast<float>(rounded))));
}

}  // namespace exakit
