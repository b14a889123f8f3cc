#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <sodium.h>

#include "dns_wire.hpp"
#include "random.hpp"

namespace ephpub {

inline void ensure_sodium() {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
}

// One ephemeral bit: a (resolver, domain) pair whose cache entry is the bit.
struct BitCell {
    ResolverEndpoint resolver;
    std::string domain;
    uint32_t expected_ttl = 0;

    bool operator==(const BitCell&) const = default;
};

// Key material that lives only in memory.  The bit vector is wiped on
// destruction and the type refuses to be copied, so the only way a key
// leaves the process is through the resolver caches.
class EphemeralKey {
public:
    EphemeralKey() = default;
    EphemeralKey(const EphemeralKey&) = delete;
    EphemeralKey& operator=(const EphemeralKey&) = delete;
    EphemeralKey(EphemeralKey&& other) noexcept { *this = std::move(other); }
    EphemeralKey& operator=(EphemeralKey&& other) noexcept {
        if (this != &other) {
            wipe();
            bits_ = std::move(other.bits_);
            other.bits_.clear();
        }
        return *this;
    }
    ~EphemeralKey() { wipe(); }

    static EphemeralKey random(RandomSource& rng, int nbits = 128) {
        EphemeralKey k;
        k.bits_.resize(size_t(nbits));
        for (auto& b : k.bits_) b = uint8_t(rng.next_u64() & 1);
        return k;
    }

    static EphemeralKey from_bits(std::vector<uint8_t> bits01) {
        for (auto b : bits01)
            if (b > 1) throw InputError("key bits must be 0 or 1");
        EphemeralKey k;
        k.bits_ = std::move(bits01);
        return k;
    }

    bool empty() const { return bits_.empty(); }
    int bit_count() const { return int(bits_.size()); }
    const std::vector<uint8_t>& bits() const { return bits_; }

    // 16 bytes of AEAD key.  A 128-bit key packs directly; wider variants
    // are compressed through SHA-256 so the cipher keeps its native size.
    std::array<uint8_t, 16> aead_key() const {
        if (bits_.empty()) throw InputError("empty key");
        std::array<uint8_t, 16> out{};
        std::vector<uint8_t> packed((bits_.size() + 7) / 8, 0);
        for (size_t i = 0; i < bits_.size(); ++i)
            packed[i / 8] = uint8_t(packed[i / 8] | bits_[i] << (7 - i % 8));
        if (bits_.size() == 128) {
            std::copy(packed.begin(), packed.end(), out.begin());
        } else {
            unsigned char digest[crypto_hash_sha256_BYTES];
            crypto_hash_sha256(digest, packed.data(), packed.size());
            std::copy_n(digest, 16, out.begin());
            sodium_memzero(digest, sizeof digest);
        }
        sodium_memzero(packed.data(), packed.size());
        return out;
    }

    void wipe() {
        if (!bits_.empty()) sodium_memzero(bits_.data(), bits_.size());
        bits_.clear();
    }

private:
    std::vector<uint8_t> bits_;
};

// The published object: ciphertext plus the map of cache cells holding the
// key, valid until the moment the last cache entry dies.
struct EpoObject {
    uint16_t version = 1;
    uint16_t key_bits = 128;
    uint64_t expiry = 0; // UTC seconds; cells are unreadable from here on
    bytes ciphertext;
    std::vector<BitCell> cells;

    uint32_t expected_ttl() const { return cells.empty() ? 0 : cells[0].expected_ttl; }
};

inline constexpr int kParityBits = 48;

inline EpoObject epo_build(bytes ciphertext, std::vector<BitCell> cells, uint64_t expiry,
                           uint64_t now, uint16_t key_bits = 128) {
    size_t want = size_t(key_bits) + kParityBits;
    if (cells.size() != want)
        throw InputError("cell list must hold " + std::to_string(want) + " entries, got " +
                         std::to_string(cells.size()));
    if (expiry <= now) throw InputError("expiry is not in the future");

    std::vector<ResolverEndpoint> eps;
    eps.reserve(cells.size());
    for (const auto& c : cells) {
        if (c.domain.empty()) throw InputError("cell with empty domain");
        if (c.expected_ttl == 0) throw InputError("cell with zero TTL");
        if (c.expected_ttl != cells[0].expected_ttl)
            throw InputError("cells disagree on expected TTL");
        eps.push_back(c.resolver);
    }
    std::sort(eps.begin(), eps.end());
    if (std::adjacent_find(eps.begin(), eps.end()) != eps.end())
        throw InputError("duplicate resolver across cells");

    EpoObject epo;
    epo.key_bits = key_bits;
    epo.expiry = expiry;
    epo.ciphertext = std::move(ciphertext);
    epo.cells = std::move(cells);
    return epo;
}

namespace detail {

inline constexpr char kEpoMagic[4] = {'E', 'P', 'O', '1'};

inline std::string domain_suffix(const std::string& name) {
    size_t dot = name.find('.');
    return dot == std::string::npos ? std::string() : name.substr(dot + 1);
}

inline void check_domain(const std::string& name, size_t offset) {
    try {
        bytes scratch;
        append_qname(scratch, name);
    } catch (const InputError& e) {
        throw ParseError(std::string("bad cell domain: ") + e.what(), offset);
    }
}

} // namespace detail

// Canonical binary form.  Shared name suffixes (everything after the first
// label) are pooled into a dictionary: with ISP-style reverse names most of
// the 176 cells share a handful of provider zones, which is what keeps the
// object under the advertised size.  Layout, all integers big-endian:
//   "EPO1" | crc32 of the rest | version u16 | key_bits u16 | expiry u64
//   | expected_ttl u32 | cell_count u16 | suffix_count u16 | ct_len u32
//   | ciphertext | suffixes (u8 len + bytes) | cells
//   cell: addr u32 | port u16 | suffix_id u8 (0xFF none) | u8 len + bytes
inline bytes epo_serialize(const EpoObject& epo) {
    std::map<std::string, int> suffix_count;
    for (const auto& c : epo.cells) {
        auto s = detail::domain_suffix(c.domain);
        if (!s.empty() && s.size() <= 255) suffix_count[s]++;
    }
    std::vector<std::string> dict;
    for (const auto& [s, n] : suffix_count) {
        if (n >= 2 && dict.size() < 255) dict.push_back(s); // map keeps this sorted
    }
    std::map<std::string, uint8_t> dict_id;
    for (size_t i = 0; i < dict.size(); ++i) dict_id[dict[i]] = uint8_t(i);

    bytes payload;
    put_u16(payload, epo.version);
    put_u16(payload, epo.key_bits);
    put_u64(payload, epo.expiry);
    put_u32(payload, epo.expected_ttl());
    put_u16(payload, uint16_t(epo.cells.size()));
    put_u16(payload, uint16_t(dict.size()));
    put_u32(payload, uint32_t(epo.ciphertext.size()));
    payload.insert(payload.end(), epo.ciphertext.begin(), epo.ciphertext.end());
    for (const auto& s : dict) {
        payload.push_back(uint8_t(s.size()));
        payload.insert(payload.end(), s.begin(), s.end());
    }
    for (const auto& c : epo.cells) {
        put_u32(payload, c.resolver.addr);
        put_u16(payload, c.resolver.port);
        auto suffix = detail::domain_suffix(c.domain);
        auto it = dict_id.find(suffix);
        if (it != dict_id.end()) {
            std::string label = c.domain.substr(0, c.domain.size() - suffix.size() - 1);
            payload.push_back(it->second);
            payload.push_back(uint8_t(label.size()));
            payload.insert(payload.end(), label.begin(), label.end());
        } else {
            payload.push_back(0xFF);
            payload.push_back(uint8_t(c.domain.size()));
            payload.insert(payload.end(), c.domain.begin(), c.domain.end());
        }
    }

    bytes out;
    out.insert(out.end(), detail::kEpoMagic, detail::kEpoMagic + 4);
    put_u32(out, crc32(payload));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

inline EpoObject epo_parse(byte_view data) {
    if (data.size() < 8 || !std::equal(detail::kEpoMagic, detail::kEpoMagic + 4, data.begin()))
        throw ParseError("bad magic", 0);
    ByteReader rd(data);
    rd.take(4);
    uint32_t want_crc = rd.u32();
    if (crc32(data.subspan(8)) != want_crc)
        throw ParseError("checksum mismatch", 4);

    EpoObject epo;
    epo.version = rd.u16();
    if (epo.version != 1) throw ParseError("unsupported version", 8);
    epo.key_bits = rd.u16();
    epo.expiry = rd.u64();
    uint32_t expected_ttl = rd.u32();
    uint16_t cell_count = rd.u16();
    uint16_t suffix_count = rd.u16();
    uint32_t ct_len = rd.u32();
    if (cell_count != epo.key_bits + kParityBits)
        throw ParseError("cell count does not match key size", 16);
    if (expected_ttl == 0) throw ParseError("zero expected TTL", 16);

    auto ct = rd.take(ct_len);
    epo.ciphertext.assign(ct.begin(), ct.end());

    std::vector<std::string> dict(suffix_count);
    for (auto& s : dict) {
        uint8_t len = rd.u8();
        if (len == 0) throw ParseError("empty dictionary suffix", rd.offset());
        auto v = rd.take(len);
        s.assign(v.begin(), v.end());
    }

    epo.cells.reserve(cell_count);
    for (uint16_t i = 0; i < cell_count; ++i) {
        BitCell c;
        c.resolver.addr = rd.u32();
        c.resolver.port = rd.u16();
        uint8_t sid = rd.u8();
        uint8_t len = rd.u8();
        size_t name_off = rd.offset();
        auto v = rd.take(len);
        c.domain.assign(v.begin(), v.end());
        if (sid != 0xFF) {
            if (sid >= dict.size()) throw ParseError("suffix id out of range", name_off);
            c.domain += ".";
            c.domain += dict[sid];
        }
        detail::check_domain(c.domain, name_off);
        c.expected_ttl = expected_ttl;
        epo.cells.push_back(std::move(c));
    }
    if (rd.remaining() != 0) throw ParseError("trailing bytes", rd.offset());

    // run the same structural checks as epo_build
    try {
        return epo_build(std::move(epo.ciphertext), std::move(epo.cells), epo.expiry,
                         epo.expiry - 1, epo.key_bits);
    } catch (const InputError& e) {
        throw ParseError(std::string("inconsistent object: ") + e.what(), 0);
    }
}

// Wire/storage overhead: everything except the ciphertext itself.
inline size_t epo_overhead_bytes(const EpoObject& epo) {
    return epo_serialize(epo).size() - epo.ciphertext.size();
}

inline std::string epo_debug_string(const EpoObject& epo) {
    std::string out;
    out += "epo v" + std::to_string(epo.version);
    out += " key_bits=" + std::to_string(epo.key_bits);
    out += " cells=" + std::to_string(epo.cells.size());
    out += " expiry=" + std::to_string(epo.expiry);
    out += " ttl=" + std::to_string(epo.expected_ttl());
    out += " ct_bytes=" + std::to_string(epo.ciphertext.size());
    out += "\n";
    for (size_t i = 0; i < epo.cells.size(); ++i) {
        const auto& c = epo.cells[i];
        out += "  [" + std::to_string(i) + "] " + c.resolver.to_string() + " " + c.domain + "\n";
    }
    return out;
}

// --- message encryption ----------------------------------------------------

inline constexpr size_t kNonceBytes = 12;
inline constexpr size_t kTagBytes = 16;

// AES-128-GCM; output is nonce || ciphertext || tag.
inline bytes encrypt_message(byte_view plaintext, const EphemeralKey& key, RandomSource& rng) {
    bytes out(kNonceBytes);
    rng.fill(out.data(), kNonceBytes);

    auto k = key.aead_key();
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    bytes ct(plaintext.size() + kTagBytes);
    int len = 0, total = 0;
    bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_128_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
              EVP_EncryptInit_ex(ctx, nullptr, nullptr, k.data(), out.data()) == 1;
    if (ok && !plaintext.empty()) {
        ok = EVP_EncryptUpdate(ctx, ct.data(), &len, plaintext.data(), int(plaintext.size())) == 1;
        total = len;
    }
    ok = ok && EVP_EncryptFinal_ex(ctx, ct.data() + total, &len) == 1;
    total += len;
    ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kTagBytes, ct.data() + total) == 1;
    EVP_CIPHER_CTX_free(ctx);
    sodium_memzero(k.data(), k.size());
    if (!ok) throw std::runtime_error("encryption failed");
    ct.resize(size_t(total) + kTagBytes);
    out.insert(out.end(), ct.begin(), ct.end());
    return out;
}

// nullopt on authentication failure (wrong key or tampered ciphertext).
inline std::optional<bytes> decrypt_message(byte_view blob, const EphemeralKey& key) {
    if (blob.size() < kNonceBytes + kTagBytes) return std::nullopt;
    auto nonce = blob.first(kNonceBytes);
    auto body = blob.subspan(kNonceBytes, blob.size() - kNonceBytes - kTagBytes);
    auto tag = blob.last(kTagBytes);

    auto k = key.aead_key();
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    bytes pt(body.size());
    int len = 0, total = 0;
    bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_128_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
              EVP_DecryptInit_ex(ctx, nullptr, nullptr, k.data(), nonce.data()) == 1;
    if (ok && !body.empty()) {
        ok = EVP_DecryptUpdate(ctx, pt.data(), &len, body.data(), int(body.size())) == 1;
        total = len;
    }
    ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kTagBytes,
                                   const_cast<uint8_t*>(tag.data())) == 1;
    ok = ok && EVP_DecryptFinal_ex(ctx, pt.data() + total, &len) == 1;
    total += len;
    EVP_CIPHER_CTX_free(ctx);
    sodium_memzero(k.data(), k.size());
    if (!ok) return std::nullopt;
    pt.resize(size_t(total));
    return pt;
}

// --- receiver-locked wrapping ---------------------------------------------

// X25519 keypair for wrapping a whole serialized object so that only the
// intended receiver can even see which resolvers and domains are involved.
struct SealKeypair {
    std::array<uint8_t, crypto_box_PUBLICKEYBYTES> pk{};
    std::array<uint8_t, crypto_box_SECRETKEYBYTES> sk{};

    static SealKeypair generate() {
        ensure_sodium();
        SealKeypair kp;
        crypto_box_keypair(kp.pk.data(), kp.sk.data());
        return kp;
    }

    ~SealKeypair() { sodium_memzero(sk.data(), sk.size()); }
};

inline bytes super_encrypt(byte_view serialized_epo,
                           const std::array<uint8_t, crypto_box_PUBLICKEYBYTES>& receiver_pk) {
    ensure_sodium();
    bytes out(serialized_epo.size() + crypto_box_SEALBYTES);
    if (crypto_box_seal(out.data(), serialized_epo.data(), serialized_epo.size(),
                        receiver_pk.data()) != 0)
        throw std::runtime_error("seal failed");
    return out;
}

inline std::optional<bytes> super_decrypt(byte_view sealed, const SealKeypair& kp) {
    ensure_sodium();
    if (sealed.size() < crypto_box_SEALBYTES) return std::nullopt;
    bytes out(sealed.size() - crypto_box_SEALBYTES);
    if (crypto_box_seal_open(out.data(), sealed.data(), sealed.size(), kp.pk.data(),
                             kp.sk.data()) != 0)
        return std::nullopt;
    return out;
}

} // namespace ephpub
