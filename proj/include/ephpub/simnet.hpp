#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dns_wire.hpp"
#include "random.hpp"

namespace ephpub::sim {

// How one simulated resolver departs from ideal open-resolver behavior.
// The defaults describe a fully compliant cache.
struct BehaviorProfile {
    std::string name = "compliant";
    bool answers_recursive = true;
    bool caches = true;
    bool answers_nonrecursive = true;
    bool recursive_on_rd0 = false; // serves RD=0 by recursing (and caching)
    std::optional<uint32_t> ttl_override;       // reports/caches this TTL instead
    std::optional<uint32_t> max_cache_residency; // evicts entries early
    uint32_t flush_interval = 3600;             // batch eviction period
    double answer_loss_prob = 0.0;
    double latency_base_ms = 2.0;
    double latency_jitter_mean_ms = 8.0;

    static BehaviorProfile preset(const std::string& which) {
        BehaviorProfile p;
        p.name = which;
        if (which == "compliant") {
        } else if (which == "unreachable") {
            p.answer_loss_prob = 1.0;
        } else if (which == "no_recursion") {
            p.answers_recursive = false;
        } else if (which == "no_cache") {
            p.caches = false;
        } else if (which == "no_rd0") {
            p.answers_nonrecursive = false;
        } else if (which == "ttl_clamp") {
            p.ttl_override = 300;
        } else if (which == "rd0_recursive") {
            p.recursive_on_rd0 = true;
        } else if (which == "short_residency") {
            p.max_cache_residency = 1800;
        } else {
            throw InputError("unknown behavior profile: " + which);
        }
        return p;
    }
};

struct AuthRecord {
    std::string rdata;
    uint32_t ttl = 0;
};

// Deterministic answer space: every name's existence, address and TTL are
// pure functions of (universe seed, name), so no state is materialized and
// identically-configured runs resolve identically.  Name families:
//   h<base36-ip>.<provider>.<tld>   forward host names (A)
//   d.c.b.a.in-addr.arpa            reverse map back to the host name (PTR)
//   www.<provider>.<tld>            provider web hosts (A)
//   c<k>.t<ttl>.probe.example      probe names with a chosen TTL (A)
// Relative frequency of authoritative TTLs among hostnames, matching what
// reverse-lookup harvesting tends to see in the wild: one day dominates,
// one week is the practical maximum.
inline std::vector<std::pair<uint32_t, uint64_t>> default_ttl_weights() {
    return {
        {1200, 13595},   {1800, 7269},   {3600, 201789},  {7200, 171685},
        {43200, 180144}, {86400, 998450}, {172800, 77326}, {259200, 12317},
        {432000, 13450}, {604800, 42142},
    };
}

class AuthoritativeUniverse {
public:
    struct Params {
        uint64_t seed = 1;
        double resolvable_fraction = 1.0; // share of IPv4 space with a PTR
        std::vector<std::pair<uint32_t, uint64_t>> ttl_weights = default_ttl_weights();
    };

    AuthoritativeUniverse() : AuthoritativeUniverse(Params{}) {}

    explicit AuthoritativeUniverse(Params p) : params_(std::move(p)) {
        total_weight_ = 0;
        for (auto& [ttl, w] : params_.ttl_weights) total_weight_ += w;
        if (total_weight_ == 0) throw InputError("empty ttl weight table");
    }

    const Params& params() const { return params_; }

    std::optional<AuthRecord> lookup(const std::string& qname, uint16_t qtype) const {
        if (qname.ends_with(".in-addr.arpa")) {
            auto ip = parse_reverse(qname);
            if (!ip || !ip_resolvable(*ip)) return std::nullopt;
            if (qtype != rrtype::PTR) return std::nullopt;
            return AuthRecord{host_name(*ip), 7200};
        }
        if (qtype != rrtype::A) return std::nullopt;
        if (auto ttl = parse_probe(qname))
            return AuthRecord{"198.18.0.1", *ttl};
        if (qname.starts_with("www.")) {
            if (!known_suffix(qname.substr(4))) return std::nullopt;
            return AuthRecord{ip_string(uint32_t(hash(qname))), 3600};
        }
        if (qname.size() > 1 && qname[0] == 'h') {
            size_t dot = qname.find('.');
            if (dot == std::string::npos) return std::nullopt;
            auto ip = from_base36(qname.substr(1, dot - 1));
            if (!ip || !ip_resolvable(*ip)) return std::nullopt;
            if (host_name(*ip) != qname) return std::nullopt; // wrong suffix for this ip
            return AuthRecord{ip_string(*ip), ttl_of_host(qname)};
        }
        return std::nullopt;
    }

    bool ip_resolvable(uint32_t ip) const {
        if (params_.resolvable_fraction >= 1.0) return true;
        uint64_t h = hash("ptr?" + std::to_string(ip));
        return double(h >> 11) * 0x1.0p-53 < params_.resolvable_fraction;
    }

    std::string host_name(uint32_t ip) const {
        return "h" + to_base36(ip) + "." + suffix_for(hash("sfx" + std::to_string(ip)));
    }

    static std::string reverse_name(uint32_t ip) {
        return std::to_string(ip & 0xFF) + "." + std::to_string((ip >> 8) & 0xFF) + "." +
               std::to_string((ip >> 16) & 0xFF) + "." + std::to_string(ip >> 24) + ".in-addr.arpa";
    }

    // Authoritative TTL of a forward host name, drawn from the weight table.
    uint32_t ttl_of_host(const std::string& name) const {
        uint64_t h = hash("ttl" + name) % total_weight_;
        for (auto& [ttl, w] : params_.ttl_weights) {
            if (h < w) return ttl;
            h -= w;
        }
        return params_.ttl_weights.back().first;
    }

    static std::string probe_name(uint64_t counter, uint32_t ttl) {
        return "c" + std::to_string(counter) + ".t" + std::to_string(ttl) + ".probe.example";
    }

private:
    static constexpr const char* kSylA[8] = {"oak", "elm", "ash", "fern", "moss", "reed", "sage", "pine"};
    static constexpr const char* kSylB[7] = {"mesh", "link", "net", "wave", "path", "gate", "peak"};
    static constexpr const char* kTld[3] = {"net", "com", "org"};

    std::string suffix_for(uint64_t h) const {
        return std::string(kSylA[h % 8]) + kSylB[(h / 8) % 7] + "." + kTld[(h / 56) % 3];
    }

    bool known_suffix(const std::string& s) const {
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 7; ++b)
                for (int t = 0; t < 3; ++t)
                    if (s == std::string(kSylA[a]) + kSylB[b] + "." + kTld[t]) return true;
        return false;
    }

    static std::string to_base36(uint32_t v) {
        if (v == 0) return "0";
        std::string s;
        while (v) {
            uint32_t d = v % 36;
            s.insert(s.begin(), char(d < 10 ? '0' + d : 'a' + d - 10));
            v /= 36;
        }
        return s;
    }

    static std::optional<uint32_t> from_base36(std::string_view s) {
        if (s.empty() || s.size() > 7) return std::nullopt;
        uint64_t v = 0;
        for (char c : s) {
            uint32_t d;
            if (c >= '0' && c <= '9') d = uint32_t(c - '0');
            else if (c >= 'a' && c <= 'z') d = uint32_t(c - 'a' + 10);
            else return std::nullopt;
            v = v * 36 + d;
            if (v > 0xFFFFFFFFull) return std::nullopt;
        }
        return uint32_t(v);
    }

    static std::optional<uint32_t> parse_reverse(const std::string& qname) {
        // "d.c.b.a.in-addr.arpa" with the octets reversed
        std::string_view s = qname;
        s.remove_suffix(13); // ".in-addr.arpa"
        uint32_t octets[4];
        for (int i = 0; i < 4; ++i) {
            size_t dot = s.find('.');
            std::string_view part = dot == std::string_view::npos ? s : s.substr(0, dot);
            if (i < 3 && dot == std::string_view::npos) return std::nullopt;
            if (i == 3 && dot != std::string_view::npos) return std::nullopt;
            if (part.empty() || part.size() > 3) return std::nullopt;
            uint32_t v = 0;
            for (char c : part) {
                if (c < '0' || c > '9') return std::nullopt;
                v = v * 10 + uint32_t(c - '0');
            }
            if (v > 255) return std::nullopt;
            octets[i] = v;
            if (dot != std::string_view::npos) s.remove_prefix(dot + 1);
        }
        return octets[3] << 24 | octets[2] << 16 | octets[1] << 8 | octets[0];
    }

    static std::optional<uint32_t> parse_probe(const std::string& qname) {
        if (!qname.ends_with(".probe.example")) return std::nullopt;
        if (qname.empty() || qname[0] != 'c') return std::nullopt;
        size_t dot = qname.find('.');
        if (dot == std::string::npos || dot + 2 >= qname.size() || qname[dot + 1] != 't') return std::nullopt;
        size_t dot2 = qname.find('.', dot + 1);
        uint64_t ttl = 0;
        for (size_t i = dot + 2; i < dot2; ++i) {
            char c = qname[i];
            if (c < '0' || c > '9') return std::nullopt;
            ttl = ttl * 10 + uint64_t(c - '0');
            if (ttl > 0xFFFFFFFFull) return std::nullopt;
        }
        return uint32_t(ttl);
    }

    static std::string ip_string(uint32_t ip) {
        return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xFF) + "." +
               std::to_string((ip >> 8) & 0xFF) + "." + std::to_string(ip & 0xFF);
    }

    uint64_t hash(const std::string& s) const {
        uint64_t h = 0xcbf29ce484222325ull ^ params_.seed;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        uint64_t st = h;
        return detail::splitmix64(st);
    }

    Params params_;
    uint64_t total_weight_ = 0;
};

struct CacheEntry {
    std::string rdata;
    uint32_t reported_ttl = 0; // what the resolver believes and reports
    uint64_t written_at = 0;
    uint64_t expiry = 0;  // written_at + reported_ttl
    uint64_t drop_at = 0; // earlier than expiry when residency is capped
};

// One resolver with its cache and pending maintenance events.  Restarts and
// flushes are applied lazily the next time the resolver is touched, which
// keeps advancing the clock O(1) regardless of population size.
class SimResolver {
public:
    SimResolver(ResolverEndpoint ep, BehaviorProfile profile, uint64_t start_time)
        : endpoint_(ep), profile_(std::move(profile)),
          last_flush_bucket_(start_time / std::max(1u, profile_.flush_interval)) {}

    const ResolverEndpoint& endpoint() const { return endpoint_; }
    const BehaviorProfile& profile() const { return profile_; }

    void schedule_restart(uint64_t t) {
        restarts_.insert(std::upper_bound(restarts_.begin(), restarts_.end(), t), t);
    }

    QueryOutcome serve(const DnsQuestion& q, uint64_t now, const AuthoritativeUniverse& universe) {
        maintain(now);
        bool recurse = q.mode == QueryMode::Recursive;
        if (!recurse && profile_.recursive_on_rd0) recurse = true;

        if (recurse) {
            if (!profile_.answers_recursive && q.mode == QueryMode::Recursive)
                return {OutcomeKind::Refused, 0, "", 0.0};
            if (auto* e = alive(q.qname, now))
                return {OutcomeKind::Hit, uint32_t(e->expiry - now), e->rdata, 0.0};
            auto auth = universe.lookup(q.qname, q.qtype);
            if (!auth) return {OutcomeKind::Miss, 0, "", 0.0};
            uint32_t eff = profile_.ttl_override.value_or(auth->ttl);
            if (profile_.caches) {
                uint64_t keep = profile_.max_cache_residency
                                    ? std::min<uint64_t>(eff, *profile_.max_cache_residency)
                                    : eff;
                cache_[q.qname] = CacheEntry{auth->rdata, eff, now, now + eff, now + keep};
            }
            return {OutcomeKind::Hit, eff, auth->rdata, 0.0};
        }

        if (!profile_.answers_nonrecursive)
            return {OutcomeKind::Refused, 0, "", 0.0};
        if (auto* e = alive(q.qname, now))
            return {OutcomeKind::Hit, uint32_t(e->expiry - now), e->rdata, 0.0};
        return {OutcomeKind::Miss, 0, "", 0.0};
    }

    size_t cache_size(uint64_t now) {
        maintain(now);
        return cache_.size();
    }

    bool has_cached(const std::string& name, uint64_t now) {
        maintain(now);
        return alive(name, now) != nullptr;
    }

    // Test/persistence access to the raw cache (post-maintenance).
    std::unordered_map<std::string, CacheEntry>& cache(uint64_t now) {
        maintain(now);
        return cache_;
    }
    const std::vector<uint64_t>& restarts() const { return restarts_; }

    void restore_entry(const std::string& name, CacheEntry e) { cache_[name] = std::move(e); }

    // Operators change software mid-experiment; cached entries survive.
    void set_profile(BehaviorProfile p) { profile_ = std::move(p); }

private:
    // A restart at R drops everything written at or before R; a flush
    // boundary sweeps entries that were already dead when it passed.
    void maintain(uint64_t now) {
        while (restarts_applied_ < restarts_.size() && restarts_[restarts_applied_] <= now) {
            uint64_t r = restarts_[restarts_applied_++];
            std::erase_if(cache_, [r](const auto& kv) { return kv.second.written_at <= r; });
        }
        uint32_t interval = std::max(1u, profile_.flush_interval);
        uint64_t bucket = now / interval;
        if (bucket > last_flush_bucket_) {
            uint64_t boundary = bucket * interval;
            std::erase_if(cache_, [boundary](const auto& kv) {
                return std::min(kv.second.expiry, kv.second.drop_at) < boundary;
            });
            last_flush_bucket_ = bucket;
        }
    }

    CacheEntry* alive(const std::string& name, uint64_t now) {
        auto it = cache_.find(name);
        if (it == cache_.end()) return nullptr;
        // present exactly at the expiry boundary still answers, with TTL 0
        if (now > it->second.expiry || now > it->second.drop_at) return nullptr;
        return &it->second;
    }

    ResolverEndpoint endpoint_;
    BehaviorProfile profile_;
    std::unordered_map<std::string, CacheEntry> cache_;
    std::vector<uint64_t> restarts_;
    size_t restarts_applied_ = 0;
    uint64_t last_flush_bucket_;
};

struct TranscriptEntry {
    uint64_t t = 0;
    ResolverEndpoint to;
    std::string qname;
    QueryMode mode = QueryMode::Recursive;
    OutcomeKind result = OutcomeKind::Timeout;
};

struct PopulationGroup {
    BehaviorProfile profile;
    size_t count = 0;
};

struct SimConfig {
    uint64_t seed = 1;
    uint64_t start_time = 1'700'000'000;
    AuthoritativeUniverse::Params universe;
    std::vector<PopulationGroup> population;
    int retries = 2;
    double timeout_ms = 2000.0;
};

// Discrete-time network of resolvers behind the Transport interface.
// Queries never consume virtual time (latency is reported, not waited on);
// time moves only through advance()/wait_until().  All randomness flows
// from the config seed, so a given configuration replays byte-identically.
class SimFabric final : public Transport {
public:
    explicit SimFabric(SimConfig cfg)
        : cfg_(std::move(cfg)), universe_(cfg_.universe), clock_(cfg_.start_time), rng_(cfg_.seed) {
        size_t total = 0;
        for (auto& g : cfg_.population) total += g.count;
        std::vector<uint32_t> order;
        order.reserve(total);
        for (uint32_t gi = 0; gi < cfg_.population.size(); ++gi)
            order.insert(order.end(), cfg_.population[gi].count, gi);
        rng_.shuffle(order);

        resolvers_.reserve(total + 1);
        for (size_t i = 0; i < total; ++i) {
            ResolverEndpoint ep{uint32_t(0x0A000000 + 1 + i), 53};
            resolvers_.emplace_back(ep, cfg_.population[order[i]].profile, cfg_.start_time);
            index_[ep] = i;
        }
        // always-compliant recursor used for harvesting, not part of the pool
        ResolverEndpoint local{0xC0000235, 53}; // 192.0.2.53
        resolvers_.emplace_back(local, BehaviorProfile::preset("compliant"), cfg_.start_time);
        index_[local] = resolvers_.size() - 1;
        local_ = local;
    }

    // --- Transport ---------------------------------------------------------

    QueryOutcome query(const ResolverEndpoint& to, const DnsQuestion& q) override {
        auto it = index_.find(to);
        for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
            TranscriptEntry entry{clock_, to, q.qname, q.mode, OutcomeKind::Timeout};
            if (it == index_.end()) {
                transcript_.push_back(std::move(entry));
                continue; // nobody there: this attempt times out
            }
            auto& resolver = resolvers_[it->second];
            const auto& prof = resolver.profile();
            if (prof.answer_loss_prob > 0 && rng_.chance(prof.answer_loss_prob)) {
                transcript_.push_back(std::move(entry)); // datagram lost
                continue;
            }
            QueryOutcome out = resolver.serve(q, clock_, universe_);
            out.rtt_ms = prof.latency_base_ms + rng_.exponential(prof.latency_jitter_mean_ms);
            entry.result = out.kind;
            transcript_.push_back(std::move(entry));
            return out; // Refused is final; only lost datagrams retry
        }
        return {OutcomeKind::Timeout, 0, "", cfg_.timeout_ms};
    }

    uint64_t now() override { return clock_; }

    void wait_until(uint64_t t) override {
        if (t > clock_) clock_ = t;
    }

    unsigned max_parallelism() const override { return 1; }

    // --- simulation controls ------------------------------------------------

    void advance(uint64_t dt) { clock_ += dt; }

    const AuthoritativeUniverse& universe() const { return universe_; }
    SeededRandom& rng() { return rng_; }
    const SimConfig& config() const { return cfg_; }
    ResolverEndpoint local_recursor() const { return local_; }

    // pool endpoints, excluding the harvesting recursor
    std::vector<ResolverEndpoint> endpoints() const {
        std::vector<ResolverEndpoint> out;
        out.reserve(resolvers_.size() - 1);
        for (const auto& r : resolvers_)
            if (r.endpoint() != local_) out.push_back(r.endpoint());
        return out;
    }

    SimResolver& at(const ResolverEndpoint& ep) {
        auto it = index_.find(ep);
        if (it == index_.end()) throw InputError("no such resolver: " + ep.to_string());
        return resolvers_[it->second];
    }

    void schedule_restart(const ResolverEndpoint& ep, uint64_t t) { at(ep).schedule_restart(t); }

    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    void clear_transcript() { transcript_.clear(); }

    // --- adversaries ---------------------------------------------------------

    void mark_compromised(double fraction) {
        compromised_.clear();
        size_t n = resolvers_.size() - 1; // exclude local recursor
        size_t k = size_t(fraction * double(n) + 0.5);
        for (size_t i : rng_.sample_indices(n, k))
            compromised_.insert(resolvers_[i].endpoint());
    }

    bool is_compromised(const ResolverEndpoint& ep) const { return compromised_.count(ep) != 0; }

    size_t compromised_count() const { return compromised_.size(); }

private:
    SimConfig cfg_;
    AuthoritativeUniverse universe_;
    uint64_t clock_;
    SeededRandom rng_;
    std::vector<SimResolver> resolvers_;
    std::map<ResolverEndpoint, size_t> index_;
    std::vector<TranscriptEntry> transcript_;
    std::set<ResolverEndpoint> compromised_;
    ResolverEndpoint local_;
};

} // namespace ephpub::sim
