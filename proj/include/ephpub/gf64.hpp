#pragma once

#include <array>
#include <cstdint>

#include "common.hpp"

namespace ephpub {

namespace detail {

struct Gf64Tables {
    std::array<uint8_t, 63> exp{};
    std::array<uint8_t, 64> log{};
};

constexpr Gf64Tables make_gf64_tables(uint8_t poly) {
    Gf64Tables t{};
    uint8_t x = 1;
    for (int i = 0; i < 63; ++i) {
        t.exp[i] = x;
        t.log[x] = uint8_t(i);
        x = uint8_t(x << 1);
        if (x & 0x40) x ^= poly;
    }
    return t;
}

inline constexpr Gf64Tables gf64_tables = make_gf64_tables(0x43);

} // namespace detail

// GF(2^6) built on the primitive polynomial x^6 + x + 1.  Elements are the
// integers 0..63; addition is XOR, multiplication goes through exp/log
// tables generated at compile time from the generator alpha = x.
class Gf64 {
public:
    static constexpr int field_bits = 6;
    static constexpr int order = 63;             // multiplicative order
    static constexpr uint8_t poly = 0x43;        // x^6 + x + 1

    constexpr Gf64() = default;
    constexpr explicit Gf64(uint8_t v) : v_(v) {
        if (v > 63) throw DomainError("value outside GF(2^6)");
    }

    constexpr uint8_t value() const { return v_; }
    constexpr bool is_zero() const { return v_ == 0; }

    static constexpr Gf64 alpha() { return Gf64(2); }

    friend constexpr Gf64 operator+(Gf64 a, Gf64 b) { return Gf64(uint8_t(a.v_ ^ b.v_)); }
    friend constexpr Gf64 operator-(Gf64 a, Gf64 b) { return a + b; }

    friend constexpr Gf64 operator*(Gf64 a, Gf64 b) {
        if (a.is_zero() || b.is_zero()) return Gf64(0);
        return from_log((detail::gf64_tables.log[a.v_] + detail::gf64_tables.log[b.v_]) % order);
    }

    friend constexpr Gf64 operator/(Gf64 a, Gf64 b) {
        if (b.is_zero()) throw DomainError("division by zero in GF(2^6)");
        if (a.is_zero()) return Gf64(0);
        return from_log((detail::gf64_tables.log[a.v_] + order - detail::gf64_tables.log[b.v_]) % order);
    }

    constexpr Gf64 inverse() const {
        if (is_zero()) throw DomainError("zero has no inverse in GF(2^6)");
        return from_log((order - detail::gf64_tables.log[v_]) % order);
    }

    // a^e with e reduced mod 63; 0^0 = 1 by convention, 0^e = 0 otherwise.
    constexpr Gf64 pow(int64_t e) const {
        if (is_zero()) {
            if (e == 0) return Gf64(1);
            if (e < 0) throw DomainError("negative power of zero in GF(2^6)");
            return Gf64(0);
        }
        int64_t le = (int64_t(detail::gf64_tables.log[v_]) * e) % order;
        if (le < 0) le += order;
        return from_log(int(le));
    }

    constexpr int log() const {
        if (is_zero()) throw DomainError("log of zero in GF(2^6)");
        return detail::gf64_tables.log[v_];
    }

    static constexpr Gf64 from_log(int e) { return Gf64(detail::gf64_tables.exp[e % order]); }

    friend constexpr bool operator==(Gf64 a, Gf64 b) { return a.v_ == b.v_; }
    friend constexpr bool operator!=(Gf64 a, Gf64 b) { return a.v_ != b.v_; }

private:
    uint8_t v_ = 0;
};

} // namespace ephpub
