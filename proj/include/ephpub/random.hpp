#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <cmath>
#include <vector>

#include <sodium.h>

#include "common.hpp"

namespace ephpub {

// Randomness source used throughout the library.  Two implementations:
// SeededRandom gives a reproducible stream for simulation, SystemRandom
// draws from the OS CSPRNG for real key material.  Derived quantities
// (bounded integers, shuffles, floats) are implemented here rather than
// with std::uniform_int_distribution so that identical seeds produce
// identical byte streams on every platform.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual uint64_t next_u64() = 0;

    void fill(void* buf, size_t n) {
        auto* p = static_cast<uint8_t*>(buf);
        while (n >= 8) {
            uint64_t v = next_u64();
            std::memcpy(p, &v, 8);
            p += 8;
            n -= 8;
        }
        if (n) {
            uint64_t v = next_u64();
            std::memcpy(p, &v, n);
        }
    }

    // Uniform on [0, bound) without modulo bias.
    uint64_t below(uint64_t bound) {
        if (bound == 0) throw DomainError("below(0)");
        uint64_t threshold = (~bound + 1) % bound; // 2^64 mod bound
        for (;;) {
            uint64_t v = next_u64();
            if (v >= threshold) return v % bound;
        }
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Exponential with the given mean, for latency models.
    double exponential(double mean) {
        double u;
        do { u = unit(); } while (u == 0.0);
        return -mean * std::log(u);
    }

    bool chance(double p) { return unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    // k distinct indices drawn uniformly from [0, n).
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        if (k > n) throw InputError("sample larger than population");
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = 0; i < k; ++i)
            std::swap(idx[i], idx[i + below(n - i)]);
        idx.resize(k);
        return idx;
    }
};

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

// xoshiro256** seeded through splitmix64.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = detail::splitmix64(sm);
    }

    uint64_t next_u64() override {
        uint64_t result = rotl(s_[1] * 5, 7) * 9;
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Derive an independent child stream (per-resolver jitter, etc).
    SeededRandom fork(uint64_t tag) {
        return SeededRandom(next_u64() ^ (tag * 0x9E3779B97F4A7C15ull));
    }

    // Snapshot/restore, so a paused simulation resumes mid-stream.
    std::array<uint64_t, 4> state() const { return {s_[0], s_[1], s_[2], s_[3]}; }
    void restore(const std::array<uint64_t, 4>& st) {
        for (int i = 0; i < 4; ++i) s_[i] = st[size_t(i)];
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

class SystemRandom final : public RandomSource {
public:
    SystemRandom() {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    }
    uint64_t next_u64() override {
        uint64_t v;
        randombytes_buf(&v, sizeof v);
        return v;
    }
};

} // namespace ephpub
