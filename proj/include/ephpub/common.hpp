#pragma once

#include <cstdint>
#include <cstddef>
#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ephpub {

using bytes = std::vector<uint8_t>;
using byte_view = std::span<const uint8_t>;

// Caller passed something structurally invalid (wrong arity, bad name, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Arithmetic precondition violated (e.g. inverse of zero).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Malformed serialized input; carries the byte offset where parsing stopped.
struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& what, size_t off = 0)
        : std::runtime_error(what + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

// The domain pool cannot supply enough candidates for the requested TTL.
struct InsufficientDomains : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A bit-1 write could not be placed even after exhausting the replan budget.
struct EncodeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// TTL-skew read could not separate the two TTL populations.
struct SkewAmbiguous : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

constexpr std::array<uint32_t, 256> make_crc32_table() {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k)
            c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

inline constexpr auto crc32_table = make_crc32_table();

} // namespace detail

inline uint32_t crc32(byte_view data, uint32_t seed = 0) {
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (uint8_t b : data)
        c = detail::crc32_table[(c ^ b) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

// Big-endian integer append/read used by every binary format in the project.
inline void put_u16(bytes& out, uint16_t v) {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

inline void put_u32(bytes& out, uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(uint8_t(v >> s));
}

inline void put_u64(bytes& out, uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(uint8_t(v >> s));
}

class ByteReader {
public:
    explicit ByteReader(byte_view data) : data_(data) {}

    size_t offset() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(data_[pos_] << 8 | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | data_[pos_ + i];
        pos_ += 8;
        return v;
    }
    byte_view take(size_t n) {
        need(n);
        byte_view v = data_.subspan(pos_, n);
        pos_ += n;
        return v;
    }

private:
    void need(size_t n) const {
        if (data_.size() - pos_ < n)
            throw ParseError("truncated input", pos_);
    }
    byte_view data_;
    size_t pos_ = 0;
};

} // namespace ephpub
