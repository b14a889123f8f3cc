#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dns_wire.hpp"
#include "epo.hpp"
#include "random.hpp"
#include "rs6355.hpp"

namespace ephpub {

struct KeystoreConfig {
    int key_bits = 128;
    bool prefetch = true;        // warm the shared zone before touching cells
    double ttl_tolerance = 0.10; // accepted relative deviation from the target TTL
    int replan_budget = 8;       // fresh placements per failed bit-1 write
    int precheck_budget = 16;    // candidate domains tried per cell
    int64_t clock_skew = 60;     // seconds of slack on the expiry guard
    bool force = false;          // attempt reads even past expiry
    uint32_t skew_min_gap = 30;  // smallest TTL split accepted as attack evidence
};

struct DomainCandidate {
    std::string name;
    uint32_t ttl = 0;
    uint32_t source_ip = 0;
};

enum class BitValue : uint8_t { Zero, One, Erasure };

struct BitReading {
    int position = 0;
    BitValue value = BitValue::Erasure;
    uint32_t remaining_ttl = 0; // only meaningful when the cell answered
};

struct CellPlan {
    std::vector<BitCell> cells;
    std::vector<uint8_t> stored_bits;
    std::vector<int> write_order; // uniform random permutation of cell indices
};

struct EncodeStats {
    size_t prechecks = 0;
    size_t prefetches = 0;
    size_t writes = 0;
    size_t replans = 0;
};

struct DecodeStats {
    size_t reads = 0;
    size_t erasures = 0;
    bool parity_fetched = false;
    bool corrected = false;
};

namespace detail {

// Run fn(i) for i in [0, n) with at most `parallel` workers.  The simulator
// reports parallelism 1 and stays strictly sequential; the UDP backend
// fans out since every query blocks on the wire.
template <typename Fn>
void for_each_limited(size_t n, unsigned parallel, Fn&& fn) {
    if (parallel <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    unsigned workers = std::min<size_t>(parallel, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace detail

// Uniform sample of n distinct resolvers from the dataset.
inline std::vector<ResolverEndpoint> select_resolvers(const std::vector<ResolverEndpoint>& dataset,
                                                      size_t n, RandomSource& rng) {
    if (dataset.size() < n)
        throw InsufficientDomains("dataset holds " + std::to_string(dataset.size()) +
                                  " resolvers, need " + std::to_string(n));
    std::vector<ResolverEndpoint> out;
    out.reserve(n);
    for (size_t i : rng.sample_indices(dataset.size(), n)) out.push_back(dataset[i]);
    return out;
}

// The shared-zone sibling that a cell write would also touch upstream.
inline std::string prefetch_sibling(const std::string& domain) {
    size_t dot = domain.find('.');
    return dot == std::string::npos ? "www." + domain : "www." + domain.substr(dot + 1);
}

// Best effort: warm the zone so the upstream query pattern is the same for
// both bit values.  Outcome deliberately ignored.
inline void prefetch_domain(Transport& t, const BitCell& cell) {
    t.query(cell.resolver, {prefetch_sibling(cell.domain), rrtype::A, QueryMode::Recursive});
}

// Pair each resolver with a fresh domain of the right TTL whose cell reads
// empty right now.  Candidates that already sit in the resolver's cache (or
// fail to answer) are discarded and a new one is drawn.  Cells are visited
// in random order: the wire sequence of prechecks must not map domains to
// bit positions, or the later writes would give the positions of the ones.
inline std::vector<BitCell> select_domains(Transport& t,
                                           const std::vector<ResolverEndpoint>& resolvers,
                                           const std::vector<DomainCandidate>& pool,
                                           uint32_t target_ttl, const KeystoreConfig& cfg,
                                           RandomSource& rng, EncodeStats* stats = nullptr) {
    std::vector<const DomainCandidate*> fit;
    for (const auto& d : pool) {
        double dev = std::abs(double(d.ttl) - double(target_ttl));
        if (dev <= cfg.ttl_tolerance * double(target_ttl)) fit.push_back(&d);
    }
    if (fit.size() < resolvers.size())
        throw InsufficientDomains("no domains with requested TTL: pool has " +
                                  std::to_string(fit.size()) + " candidates for " +
                                  std::to_string(resolvers.size()) + " cells");
    rng.shuffle(fit);

    std::vector<size_t> visit(resolvers.size());
    for (size_t i = 0; i < visit.size(); ++i) visit[i] = i;
    rng.shuffle(visit);

    std::vector<BitCell> cells(resolvers.size());
    size_t cursor = 0;
    for (size_t vi : visit) {
        const auto& ep = resolvers[vi];
        bool placed = false;
        for (int tries = 0; tries < cfg.precheck_budget && cursor < fit.size(); ++tries) {
            const auto* cand = fit[cursor++];
            if (stats) stats->prechecks++;
            auto out = t.query(ep, {cand->name, qtype_for(cand->name), QueryMode::NonRecursive});
            if (out.kind == OutcomeKind::Miss) {
                cells[vi] = {ep, cand->name, target_ttl};
                placed = true;
                break;
            }
            // Hit: cell already carries a bit; Refused/Timeout: unusable here
        }
        if (!placed)
            throw InsufficientDomains("could not place an empty cell on " + ep.to_string());
    }
    return cells;
}

// Storing a one is a recursive query; storing a zero is silence.
inline bool write_bit(Transport& t, const BitCell& cell, uint8_t bit) {
    if (bit == 0) return true;
    auto out = t.query(cell.resolver, {cell.domain, qtype_for(cell.domain), QueryMode::Recursive});
    return out.kind == OutcomeKind::Hit;
}

// A cache probe mapped onto the bit alphabet.  Failures to elicit an answer
// are erasures, never bit values.
inline BitReading read_bit(Transport& t, const BitCell& cell, int position) {
    auto out = t.query(cell.resolver, {cell.domain, qtype_for(cell.domain), QueryMode::NonRecursive});
    switch (out.kind) {
        case OutcomeKind::Hit: return {position, BitValue::One, out.remaining_ttl};
        case OutcomeKind::Miss: return {position, BitValue::Zero, 0};
        default: return {position, BitValue::Erasure, 0};
    }
}

struct EncodeResult {
    EpoObject epo;
    CellPlan plan;
    EncodeStats stats;
};

namespace detail {

// Spread a given key's codeword over the caches.  Callers outside the
// leakage experiments should use encode_message, which draws a fresh key.
inline EncodeResult encode_with_key(Transport& t, const std::vector<ResolverEndpoint>& dataset,
                                    const std::vector<DomainCandidate>& pool,
                                    const EphemeralKey& key, byte_view message,
                                    uint32_t validity_ttl, const KeystoreConfig& cfg,
                                    RandomSource& rng) {
    RsCodec codec(cfg.key_bits);
    const size_t n = size_t(codec.stored_bits());
    const uint64_t start = t.now();

    EncodeStats stats;
    auto stored = codec.encode(key.bits()).to_stored_bits();

    auto primary = select_resolvers(dataset, n, rng);

    // every unused dataset entry can stand in for a failed cell later
    std::vector<ResolverEndpoint> spares;
    {
        std::set<ResolverEndpoint> used(primary.begin(), primary.end());
        for (const auto& ep : dataset)
            if (!used.count(ep)) spares.push_back(ep);
        rng.shuffle(spares);
    }

    auto cells = select_domains(t, primary, pool, validity_ttl, cfg, rng, &stats);

    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = int(i);
    rng.shuffle(order);

    if (cfg.prefetch) {
        for (int i : order) {
            prefetch_domain(t, cells[size_t(i)]);
            stats.prefetches++;
        }
    }

    size_t spare_cursor = 0;
    for (int i : order) {
        auto& cell = cells[size_t(i)];
        if (stored[size_t(i)] == 0) continue;
        stats.writes++;
        if (write_bit(t, cell, 1)) continue;

        bool replaced = false;
        for (int attempt = 0; attempt < cfg.replan_budget && !replaced; ++attempt) {
            if (spare_cursor >= spares.size())
                throw EncodeFailure("dataset exhausted while replanning cell " + std::to_string(i));
            stats.replans++;
            auto fresh = select_domains(t, {spares[spare_cursor++]}, pool, validity_ttl, cfg, rng,
                                        &stats);
            if (cfg.prefetch) {
                prefetch_domain(t, fresh[0]);
                stats.prefetches++;
            }
            stats.writes++;
            if (write_bit(t, fresh[0], 1)) {
                cell = fresh[0];
                replaced = true;
            }
        }
        if (!replaced)
            throw EncodeFailure("bit placement failed after " + std::to_string(cfg.replan_budget) +
                                " replans (cell " + std::to_string(i) + " on " +
                                cell.resolver.to_string() + ")");
    }

    EncodeResult res;
    res.plan = {cells, stored, order};
    res.stats = stats;
    auto ct = encrypt_message(message, key, rng);
    res.epo = epo_build(std::move(ct), std::move(cells), start + validity_ttl, start, uint16_t(cfg.key_bits));
    return res;
}

} // namespace detail

// Publish: draw a fresh key, spread its codeword over one-per-resolver
// cache cells in random order, and return the object that points at them.
// The key is wiped before returning; only the caches hold it now.
inline EncodeResult encode_message(Transport& t, const std::vector<ResolverEndpoint>& dataset,
                                   const std::vector<DomainCandidate>& pool, byte_view message,
                                   uint32_t validity_ttl, const KeystoreConfig& cfg,
                                   RandomSource& rng) {
    auto key = EphemeralKey::random(rng, cfg.key_bits);
    auto res = detail::encode_with_key(t, dataset, pool, key, message, validity_ttl, cfg, rng);
    key.wipe();
    return res;
}

enum class DecodeStatus : uint8_t { Ok, Expired, Failed };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Failed;
    bytes plaintext;
    DecodeStats stats;
    std::vector<BitReading> readings; // as observed, data cells first
};

namespace detail {

// Assemble symbol readings from per-cell bit readings; a symbol with any
// erased bit is an erased symbol.
inline std::vector<SymbolReading> to_symbols(const RsCodec& codec,
                                             const std::vector<BitReading>& reads) {
    int nsym = codec.codeword_symbols();
    std::vector<uint8_t> value(size_t(nsym), 0);
    std::vector<bool> erased(size_t(nsym), false);
    for (const auto& r : reads) {
        auto loc = codec.locate_bit(r.position);
        if (r.value == BitValue::Erasure)
            erased[size_t(loc.symbol)] = true;
        else if (r.value == BitValue::One)
            value[size_t(loc.symbol)] |= uint8_t(1u << loc.shift);
    }
    std::vector<SymbolReading> out;
    out.reserve(size_t(nsym));
    for (int s = 0; s < nsym; ++s)
        out.push_back(erased[size_t(s)] ? SymbolReading::erased(s)
                                        : SymbolReading::known(s, Gf64(value[size_t(s)])));
    return out;
}

inline std::optional<bytes> try_key(const std::vector<uint8_t>& bits, byte_view ciphertext) {
    auto key = EphemeralKey::from_bits(bits);
    auto pt = decrypt_message(ciphertext, key);
    key.wipe();
    return pt;
}

} // namespace detail

// Retrieve: read the data cells; only when something is erased or the
// direct key fails authentication does the parity tail get read and the
// code engaged.  Past expiry (minus clock skew) nothing is read at all.
inline DecodeResult decode_message(Transport& t, const EpoObject& epo, const KeystoreConfig& cfg) {
    RsCodec codec(epo.key_bits);
    DecodeResult res;

    if (!cfg.force && t.now() + uint64_t(cfg.clock_skew) >= epo.expiry) {
        res.status = DecodeStatus::Expired;
        return res;
    }

    const int kb = epo.key_bits;
    res.readings.resize(size_t(codec.stored_bits()));
    auto read_range = [&](int from, int to) {
        detail::for_each_limited(size_t(to - from), t.max_parallelism(), [&](size_t j) {
            int pos = from + int(j);
            res.readings[size_t(pos)] = read_bit(t, epo.cells[size_t(pos)], pos);
        });
        res.stats.reads += size_t(to - from);
    };

    read_range(0, kb);
    std::vector<BitReading> data(res.readings.begin(), res.readings.begin() + kb);
    bool clean = true;
    std::vector<uint8_t> direct(size_t(kb), 0);
    for (const auto& r : data) {
        if (r.value == BitValue::Erasure) {
            clean = false;
            res.stats.erasures++;
        } else if (r.value == BitValue::One) {
            direct[size_t(r.position)] = 1;
        }
    }

    if (clean) {
        if (auto pt = detail::try_key(direct, epo.ciphertext)) {
            res.readings.resize(size_t(kb));
            res.status = DecodeStatus::Ok;
            res.plaintext = std::move(*pt);
            return res;
        }
    }

    // bit errors or erasures: fetch the parity tail and run the code
    read_range(kb, codec.stored_bits());
    for (int i = kb; i < codec.stored_bits(); ++i)
        if (res.readings[size_t(i)].value == BitValue::Erasure) res.stats.erasures++;
    res.stats.parity_fetched = true;
    res.stats.corrected = true;

    auto key_bits = codec.decode(detail::to_symbols(codec, res.readings));
    if (!key_bits) {
        res.status = DecodeStatus::Failed;
        return res;
    }
    if (auto pt = detail::try_key(*key_bits, epo.ciphertext)) {
        res.status = DecodeStatus::Ok;
        res.plaintext = std::move(*pt);
    } else {
        res.status = DecodeStatus::Failed;
    }
    return res;
}

// Forensic read for a suspected overwrite attack: every cell should answer,
// split into two TTL populations.  The fresher population is the attacker's
// re-insertion (original zeros); the staler one survived from the original
// write (ones).  Refuses when the picture is not exactly that.
inline std::vector<BitReading> ttl_skew_read(Transport& t, const EpoObject& epo,
                                             const KeystoreConfig& cfg) {
    const size_t n = epo.cells.size();
    std::vector<BitReading> reads(n);
    detail::for_each_limited(n, t.max_parallelism(), [&](size_t i) {
        reads[i] = read_bit(t, epo.cells[i], int(i));
    });

    for (const auto& r : reads)
        if (r.value != BitValue::One)
            throw SkewAmbiguous("cell " + std::to_string(r.position) +
                                " did not answer from cache; no uniform overwrite evidence");

    std::vector<uint32_t> ttls(n);
    for (size_t i = 0; i < n; ++i) ttls[i] = reads[i].remaining_ttl;
    std::sort(ttls.begin(), ttls.end());

    // exact 1-D two-means: try every split of the sorted TTLs
    double best_sse = -1.0;
    size_t best_k = 0;
    std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        pre[i + 1] = pre[i] + ttls[i];
        pre2[i + 1] = pre2[i] + double(ttls[i]) * double(ttls[i]);
    }
    auto sse = [&](size_t a, size_t b) { // [a, b)
        double cnt = double(b - a);
        double sum = pre[b] - pre[a];
        return (pre2[b] - pre2[a]) - sum * sum / cnt;
    };
    for (size_t k = 1; k < n; ++k) {
        double s = sse(0, k) + sse(k, n);
        if (best_sse < 0 || s < best_sse) {
            best_sse = s;
            best_k = k;
        }
    }
    uint64_t gap = uint64_t(ttls[best_k]) - uint64_t(ttls[best_k - 1]);
    if (gap < cfg.skew_min_gap)
        throw SkewAmbiguous("TTL populations separated by only " + std::to_string(gap) + "s");

    uint32_t threshold = ttls[best_k]; // first value of the fresh cluster
    std::vector<BitReading> out(n);
    for (size_t i = 0; i < n; ++i) {
        bool fresh = reads[i].remaining_ttl >= threshold;
        out[i] = {int(i), fresh ? BitValue::Zero : BitValue::One, reads[i].remaining_ttl};
    }
    return out;
}

// Full recovery pipeline on top of ttl_skew_read.
inline DecodeResult decode_message_after_flip(Transport& t, const EpoObject& epo,
                                              const KeystoreConfig& cfg) {
    RsCodec codec(epo.key_bits);
    DecodeResult res;
    res.readings = ttl_skew_read(t, epo, cfg);
    res.stats.reads = res.readings.size();
    res.stats.parity_fetched = true;

    auto key_bits = codec.decode(detail::to_symbols(codec, res.readings));
    if (!key_bits) return res;
    if (auto pt = detail::try_key(*key_bits, epo.ciphertext)) {
        res.status = DecodeStatus::Ok;
        res.plaintext = std::move(*pt);
    }
    return res;
}

} // namespace ephpub
