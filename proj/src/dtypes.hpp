// Signed integer element types and the fixed-point scalar helpers shared by
// the simulator and the compiler passes.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace aiegrid {

enum class DTypeKind { i8, i16, i32, i64 };

struct IntDType {
    DTypeKind kind = DTypeKind::i8;

    constexpr int bits() const {
        switch (kind) {
            case DTypeKind::i8: return 8;
            case DTypeKind::i16: return 16;
            case DTypeKind::i32: return 32;
            case DTypeKind::i64: return 64;
        }
        return 8;
    }
    constexpr int bytes() const { return bits() / 8; }
    constexpr bool operator==(const IntDType& o) const { return kind == o.kind; }
    constexpr bool operator!=(const IntDType& o) const { return kind != o.kind; }
    constexpr bool operator<(const IntDType& o) const { return kind < o.kind; }
};

inline constexpr IntDType kI8{DTypeKind::i8};
inline constexpr IntDType kI16{DTypeKind::i16};
inline constexpr IntDType kI32{DTypeKind::i32};
inline constexpr IntDType kI64{DTypeKind::i64};

struct DTypeRange {
    int64_t min;
    int64_t max;
};

// Two's-complement bounds: [-2^(bits-1), 2^(bits-1)-1].
constexpr DTypeRange dtype_range(IntDType d) {
    if (d.bits() == 64) return {INT64_MIN, INT64_MAX};
    const int64_t half = int64_t{1} << (d.bits() - 1);
    return {-half, half - 1};
}

constexpr bool in_range(int64_t v, IntDType d) {
    const DTypeRange r = dtype_range(d);
    return v >= r.min && v <= r.max;
}

constexpr int64_t clamp_to(int64_t v, IntDType d) {
    const DTypeRange r = dtype_range(d);
    if (v < r.min) return r.min;
    if (v > r.max) return r.max;
    return v;
}

// Reduce v modulo 2^bits and sign-extend: the fixed-width accumulator wrap.
constexpr int64_t wrap_to(int64_t v, IntDType d) {
    const int bits = d.bits();
    if (bits == 64) return v;
    const uint64_t mask = (uint64_t{1} << bits) - 1;
    uint64_t u = static_cast<uint64_t>(v) & mask;
    const uint64_t sign = uint64_t{1} << (bits - 1);
    if (u & sign) u |= ~mask;
    return static_cast<int64_t>(u);
}

// Wrapping add/mul at the accumulator width. Arithmetic is done in uint64
// (well-defined overflow) and re-narrowed.
constexpr int64_t wrap_add(int64_t a, int64_t b, IntDType d) {
    return wrap_to(static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b)), d);
}
constexpr int64_t wrap_mul(int64_t a, int64_t b, IntDType d) {
    return wrap_to(static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b)), d);
}

// v / 2^shift with round-half-to-even, exact for any int64 and shift >= 0.
constexpr int64_t rne_shift_right(int64_t v, int shift) {
    if (shift <= 0) return v;
    if (shift >= 63) {
        // Magnitudes below 2^62 all round to 0; keep the general path exact
        // for the remaining corner by dividing in two steps.
        const int64_t hi = rne_shift_right(v, 62);
        return rne_shift_right(hi, shift - 62);
    }
    const int64_t q = v >> shift;                       // floor division
    const int64_t r = v - (q << shift);                 // remainder in [0, 2^shift)
    const int64_t half = int64_t{1} << (shift - 1);
    if (r > half) return q + 1;
    if (r < half) return q;
    return (q & 1) ? q + 1 : q;                         // tie: round to even
}

std::string dtype_name(IntDType d);
std::optional<IntDType> dtype_from_name(std::string_view name);

} // namespace aiegrid
