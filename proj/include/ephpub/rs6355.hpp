#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "gf64.hpp"

namespace ephpub {

// One received codeword symbol: either a value in GF(2^6) or an erasure
// (the channel knows it failed to read this position).
struct SymbolReading {
    int position = 0;
    std::optional<Gf64> value; // nullopt marks an erasure

    static SymbolReading known(int pos, Gf64 v) { return {pos, v}; }
    static SymbolReading erased(int pos) { return {pos, std::nullopt}; }
};

// Systematic codeword: data symbols followed by eight parity symbols.
// Key bits are packed MSB-first into the data symbols; the final data
// symbol carries its live bits in the low positions with zero padding
// above them, so the first key_bits stored bits are exactly the key.
struct RsCodeword {
    std::vector<Gf64> data;
    std::array<Gf64, 8> parity{};
    int key_bits = 0;

    int symbols() const { return int(data.size()) + 8; }
    int stored_bits() const { return key_bits + 48; }

    Gf64 symbol(int pos) const {
        int ds = int(data.size());
        return pos < ds ? data[pos] : parity[pos - ds];
    }

    // Flatten to the bit sequence actually written to resolver caches:
    // key bits in order, then the parity symbols MSB-first.  Pad bits
    // exist only inside the arithmetic, never in storage.
    std::vector<uint8_t> to_stored_bits() const;
};

// Reed-Solomon (63,55) over GF(2^6), shortened to fit one ephemeral key:
// 22 data symbols + 8 parity for a 128-bit key (a 30-symbol codeword),
// distance 9, so any pattern with 2*errors + erasures <= 8 is corrected.
class RsCodec {
public:
    static constexpr int parity_symbols = 8;
    static constexpr int virtual_length = 63; // unshortened code length

    explicit RsCodec(int key_bits = 128) : key_bits_(key_bits) {
        if (key_bits < 6 || key_bits > 55 * 6)
            throw InputError("unsupported key size");
        data_symbols_ = (key_bits + 5) / 6;
        // live key bits in the final data symbol (the rest is zero pad)
        last_live_ = key_bits - 6 * (data_symbols_ - 1);
    }

    int data_symbols() const { return data_symbols_; }
    int codeword_symbols() const { return data_symbols_ + parity_symbols; }
    int stored_bits() const { return key_bits_ + parity_symbols * 6; }
    int key_bits() const { return key_bits_; }

    struct BitLocation {
        int symbol;
        int shift;
    };

    // Where stored bit i lives inside the symbol array.
    BitLocation locate_bit(int i) const {
        if (i < 0 || i >= stored_bits()) throw InputError("bit index out of range");
        if (i < key_bits_) {
            int s = i / 6;
            if (s < data_symbols_ - 1) return {s, 5 - i % 6};
            return {s, last_live_ - 1 - (i - 6 * s)};
        }
        int p = i - key_bits_;
        return {data_symbols_ + p / 6, 5 - p % 6};
    }

    RsCodeword encode(const std::vector<uint8_t>& key) const {
        if (int(key.size()) != key_bits_) throw InputError("wrong key length");
        RsCodeword cw;
        cw.key_bits = key_bits_;
        cw.data.assign(data_symbols_, Gf64(0));

        uint8_t acc[64] = {};
        for (int i = 0; i < key_bits_; ++i) {
            if (key[i] > 1) throw InputError("key bits must be 0 or 1");
            auto loc = locate_bit(i);
            acc[loc.symbol] |= uint8_t(key[i] << loc.shift);
        }
        for (int s = 0; s < data_symbols_; ++s) cw.data[s] = Gf64(acc[s]);

        // Parity = remainder of m(x) * x^8 divided by the generator, via
        // the usual LFSR with the message fed highest degree first.
        const auto& g = generator();
        Gf64 reg[parity_symbols] = {};
        for (int s = 0; s < data_symbols_; ++s) {
            Gf64 fb = cw.data[s] + reg[parity_symbols - 1];
            for (int j = parity_symbols - 1; j > 0; --j)
                reg[j] = reg[j - 1] + fb * g[j];
            reg[0] = fb * g[0];
        }
        for (int j = 0; j < parity_symbols; ++j)
            cw.parity[j] = reg[parity_symbols - 1 - j];
        return cw;
    }

    // Errors-and-erasures decoding.  Returns the key bits, or nullopt when
    // the word cannot be certified (too many erasures, locator/evaluator
    // inconsistencies, residual syndromes, or nonzero pad bits).
    std::optional<std::vector<uint8_t>> decode(const std::vector<SymbolReading>& readings) const {
        const int n = codeword_symbols();
        if (int(readings.size()) != n) throw InputError("need one reading per codeword position");

        std::vector<Gf64> w(n, Gf64(0));
        std::vector<bool> seen(n, false), erased(n, false);
        std::vector<int> erasure_pos;
        for (const auto& r : readings) {
            if (r.position < 0 || r.position >= n) throw InputError("reading position out of range");
            if (seen[r.position]) throw InputError("duplicate reading position");
            seen[r.position] = true;
            if (r.value) {
                w[r.position] = *r.value;
            } else {
                erased[r.position] = true;
                erasure_pos.push_back(r.position);
            }
        }

        const int f = int(erasure_pos.size());
        if (f > parity_symbols) return std::nullopt;

        auto synd = syndromes(w);
        bool clean = std::all_of(synd.begin(), synd.end(), [](Gf64 s) { return s.is_zero(); });

        if (!clean) {
            // Erasure locator from the known bad positions.
            std::vector<Gf64> gamma{Gf64(1)};
            for (int pos : erasure_pos)
                gamma = poly_mul(gamma, {Gf64(1), locator(pos)});

            // Forney syndromes: T = S * Gamma mod x^8, keep coefficients
            // above degree f-1; these see only the unknown error positions.
            std::vector<Gf64> spoly(synd.begin(), synd.end());
            auto t = poly_mul_mod(spoly, gamma, parity_symbols);
            std::vector<Gf64> u(t.begin() + f, t.end());

            auto lambda = berlekamp_massey(u);
            if (!lambda) return std::nullopt;

            auto psi = poly_mul(*lambda, gamma);
            if (poly_deg(psi) == 0) return std::nullopt; // syndromes nonzero yet nothing located

            // Chien search across the full virtual length; roots landing in
            // the shortened (never transmitted) region invalidate the word.
            std::vector<int> errata;
            for (int p = 0; p < virtual_length; ++p) {
                if (poly_eval(psi, Gf64::alpha().pow(-p)).is_zero())
                    errata.push_back(p);
            }
            if (int(errata.size()) != poly_deg(psi)) return std::nullopt;

            auto omega = poly_mul_mod(spoly, psi, parity_symbols);
            for (int p : errata) {
                int pos = n - 1 - p;
                if (pos < 0 || pos >= n) return std::nullopt;
                Gf64 xinv = Gf64::alpha().pow(-p);
                Gf64 denom = poly_eval_deriv(psi, xinv);
                if (denom.is_zero()) return std::nullopt;
                Gf64 mag = poly_eval(omega, xinv) / denom;
                if (mag.is_zero() && !erased[pos]) return std::nullopt;
                w[pos] = w[pos] + mag;
            }

            auto recheck = syndromes(w);
            for (Gf64 s : recheck)
                if (!s.is_zero()) return std::nullopt;
        }

        // Pad bits must have decoded to zero.
        uint8_t last = w[data_symbols_ - 1].value();
        if (last >> last_live_) return std::nullopt;

        std::vector<uint8_t> key(key_bits_);
        for (int i = 0; i < key_bits_; ++i) {
            auto loc = locate_bit(i);
            key[i] = (w[loc.symbol].value() >> loc.shift) & 1;
        }
        return key;
    }

    // Generator polynomial (x - a^1)...(x - a^8), index = coefficient degree.
    static const std::array<Gf64, parity_symbols + 1>& generator() {
        static const auto g = [] {
            std::array<Gf64, parity_symbols + 1> out{};
            std::vector<Gf64> acc{Gf64(1)};
            for (int j = 1; j <= parity_symbols; ++j) {
                std::vector<Gf64> next(acc.size() + 1, Gf64(0));
                Gf64 root = Gf64::alpha().pow(j);
                for (size_t i = 0; i < acc.size(); ++i) {
                    next[i + 1] = next[i + 1] + acc[i];
                    next[i] = next[i] + acc[i] * root;
                }
                acc = next;
            }
            for (size_t i = 0; i < acc.size(); ++i) out[i] = acc[i];
            return out;
        }();
        return g;
    }

    std::array<Gf64, parity_symbols> syndromes(const std::vector<Gf64>& w) const {
        std::array<Gf64, parity_symbols> s{};
        for (int j = 1; j <= parity_symbols; ++j) {
            Gf64 acc(0);
            for (int i = 0; i < int(w.size()); ++i)
                acc = acc + w[i] * locator(i).pow(j);
            s[j - 1] = acc;
        }
        return s;
    }

    // X for a reading position: alpha raised to the codeword degree.
    Gf64 locator(int pos) const { return Gf64::alpha().pow(codeword_symbols() - 1 - pos); }

private:
    static int poly_deg(const std::vector<Gf64>& p) {
        for (int i = int(p.size()) - 1; i >= 0; --i)
            if (!p[i].is_zero()) return i;
        return 0;
    }

    static std::vector<Gf64> poly_mul(const std::vector<Gf64>& a, const std::vector<Gf64>& b) {
        std::vector<Gf64> out(a.size() + b.size() - 1, Gf64(0));
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j)
                out[i + j] = out[i + j] + a[i] * b[j];
        return out;
    }

    static std::vector<Gf64> poly_mul_mod(const std::vector<Gf64>& a, const std::vector<Gf64>& b, int m) {
        std::vector<Gf64> out(m, Gf64(0));
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i].is_zero()) continue;
            for (size_t j = 0; j < b.size() && i + j < size_t(m); ++j)
                out[i + j] = out[i + j] + a[i] * b[j];
        }
        return out;
    }

    static Gf64 poly_eval(const std::vector<Gf64>& p, Gf64 x) {
        Gf64 acc(0);
        for (int i = int(p.size()) - 1; i >= 0; --i)
            acc = acc * x + p[i];
        return acc;
    }

    // Formal derivative evaluated at x: over GF(2^m) only odd terms survive.
    static Gf64 poly_eval_deriv(const std::vector<Gf64>& p, Gf64 x) {
        Gf64 acc(0), xp(1);
        Gf64 x2 = x * x;
        for (size_t i = 1; i < p.size(); i += 2) {
            acc = acc + p[i] * xp;
            xp = xp * x2;
        }
        return acc;
    }

    // Classic Berlekamp-Massey over the (Forney) syndrome sequence.
    // Rejects when the implied error count exceeds what the sequence
    // length can certify or the locator degree disagrees.
    static std::optional<std::vector<Gf64>> berlekamp_massey(const std::vector<Gf64>& u) {
        const int nn = int(u.size());
        std::vector<Gf64> lambda{Gf64(1)}, prev{Gf64(1)};
        int l = 0, m = 1;
        Gf64 b(1);
        for (int n = 0; n < nn; ++n) {
            Gf64 delta = u[n];
            for (int i = 1; i <= l && i < int(lambda.size()); ++i)
                delta = delta + lambda[i] * u[n - i];
            if (delta.is_zero()) {
                ++m;
            } else if (2 * l <= n) {
                auto tmp = lambda;
                Gf64 coef = delta / b;
                if (int(lambda.size()) < int(prev.size()) + m) lambda.resize(prev.size() + m, Gf64(0));
                for (size_t i = 0; i < prev.size(); ++i)
                    lambda[i + m] = lambda[i + m] + coef * prev[i];
                l = n + 1 - l;
                prev = tmp;
                b = delta;
                m = 1;
            } else {
                Gf64 coef = delta / b;
                if (int(lambda.size()) < int(prev.size()) + m) lambda.resize(prev.size() + m, Gf64(0));
                for (size_t i = 0; i < prev.size(); ++i)
                    lambda[i + m] = lambda[i + m] + coef * prev[i];
                ++m;
            }
        }
        if (2 * l > nn) return std::nullopt;
        if (poly_deg(lambda) != l) return std::nullopt;
        lambda.resize(l + 1, Gf64(0));
        return lambda;
    }

    int key_bits_;
    int data_symbols_;
    int last_live_;
};

inline std::vector<uint8_t> RsCodeword::to_stored_bits() const {
    RsCodec codec(key_bits);
    std::vector<uint8_t> bits(codec.stored_bits());
    for (int i = 0; i < codec.stored_bits(); ++i) {
        auto loc = codec.locate_bit(i);
        bits[i] = (symbol(loc.symbol).value() >> loc.shift) & 1;
    }
    return bits;
}

} // namespace ephpub
