#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <type_traits>

namespace exakit {

enum class PrecisionTag { FP64, FP32, BF16 };

constexpr std::size_t element_bytes(PrecisionTag p) {
    switch (p) {
        case PrecisionTag::FP64: return 8;
        case PrecisionTag::FP32: return 4;
        case PrecisionTag::BF16: return 2;
    }
    return 0;
}

std::string_view to_string(PrecisionTag p);

/// bfloat16 as its raw bit pattern: 1 sign, 8 exponent, 7 mantissa bits.
/// Equality is bitwise, so +0 != -0 and NaN == NaN with the same payload.
struct Bf16 {
    std::uint16_t bits = 0;

    static constexpr Bf16 from_bits(std::uint16_t b) { return Bf16{b}; }

    float to_float() const;
    double to_double() const { return static_cast<double>(to_float()); }

    bool is_nan() const { return (bits & 0x7F80u) == 0x7F80u && (bits & 0x007Fu) != 0; }
    bool is_inf() const { return (bits & 0x7FFFu) == 0x7F80u; }
    bool is_finite() const { return (bits & 0x7F80u) != 0x7F80u; }

    friend constexpr bool operator==(Bf16 a, Bf16 b) { return a.bits == b.bits; }
};

template <class T>
constexpr PrecisionTag precision_of() {
    if constexpr (std::is_same_v<T, double>) {
        return PrecisionTag::FP64;
    } else if constexpr (std::is_same_v<T, float>) {
        return PrecisionTag::FP32;
    } else {
        static_assert(std::is_same_v<T, Bf16>, "unsupported element type");
        return PrecisionTag::BF16;
    }
}

/// Round-to-nearest-even conversion from FP64 directly to BF16 (no
/// intermediate FP32 rounding). Overflow goes to +-inf, NaN becomes a
/// quiet NaN with the input sign, subnormals are kept.
Bf16 round_to_bf16(double x);

/// Round an FP64 value to the nearest BF16 and widen it back.
inline double quantize_bf16(double x) { return round_to_bf16(x).to_double(); }

}  // namespace exakit
