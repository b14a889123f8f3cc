#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "keystore.hpp"
#include "simnet.hpp"

namespace ephpub {

// Hands out never-before-queried probe names with a known authoritative TTL.
class ProbeDomainSource {
public:
    virtual ~ProbeDomainSource() = default;
    virtual DomainCandidate fresh(uint32_t ttl) = 0;
    virtual size_t remaining(uint32_t ttl) const = 0;
};

// Simulator flavour: the synthetic authority resolves c<k>.t<ttl>.probe.example
// for any counter, so the supply never runs dry.
class SyntheticProbeSource final : public ProbeDomainSource {
public:
    SyntheticProbeSource() = default;
    // start offset keeps resumed runs off names an earlier run already held
    explicit SyntheticProbeSource(uint64_t start) : counter_(start) {}

    DomainCandidate fresh(uint32_t ttl) override {
        return {sim::AuthoritativeUniverse::probe_name(counter_++, ttl), ttl, 0};
    }
    size_t remaining(uint32_t) const override { return SIZE_MAX; }

private:
    uint64_t counter_ = 0;
};

// Live flavour: consumes harvested domains of the exact TTL, each at most once.
class PoolProbeSource final : public ProbeDomainSource {
public:
    explicit PoolProbeSource(std::vector<DomainCandidate> pool) : pool_(std::move(pool)) {}

    DomainCandidate fresh(uint32_t ttl) override {
        for (size_t i = next_; i < pool_.size(); ++i) {
            if (pool_[i].ttl != ttl || used_.count(pool_[i].name)) continue;
            used_.insert(pool_[i].name);
            if (i == next_) ++next_;
            return pool_[i];
        }
        throw InsufficientDomains("probe pool exhausted for ttl " + std::to_string(ttl));
    }

    size_t remaining(uint32_t ttl) const override {
        size_t n = 0;
        for (const auto& d : pool_)
            if (d.ttl == ttl && !used_.count(d.name)) ++n;
        return n;
    }

private:
    std::vector<DomainCandidate> pool_;
    std::set<std::string> used_;
    size_t next_ = 0;
};

struct StageResult {
    int stage = 0;
    bool passed = false;
    std::string note;
};

struct ResolverAssessment {
    ResolverEndpoint endpoint;
    std::vector<StageResult> stages; // in the order attempted; stops at first failure
    int32_t ttl_skew = 0;            // cached-vs-authoritative TTL delta seen in stage 3

    bool reliable() const {
        return stages.size() == 4 && stages.back().passed;
    }
    // 0 when reliable, else the stage that ended the run
    int rejected_stage() const {
        if (stages.empty()) return 1;
        return stages.back().passed ? 0 : stages.back().stage;
    }
};

struct ProbeSchedule {
    uint32_t probe_ttl = 3600;
    // persistence boundary slack: 5% of the TTL but never under 2s
    uint32_t delta() const { return std::max<uint32_t>(2, probe_ttl / 20); }
};

namespace detail {

inline std::string outcome_note(uint64_t t, const std::string& name, QueryMode mode,
                                const QueryOutcome& out) {
    std::string s = "@" + std::to_string(t) + " " +
                    (mode == QueryMode::Recursive ? "rd1 " : "rd0 ") + name + " -> " +
                    to_string(out.kind);
    if (out.kind == OutcomeKind::Hit) s += " ttl=" + std::to_string(out.remaining_ttl);
    return s;
}

} // namespace detail

// Four-stage reliability filter over a set of resolvers.  Stages run as
// shared phases: every surviving resolver is probed, then the clock moves
// once, so the persistence stage costs one TTL cycle for the whole batch.
// Per resolver the stages stay strictly ordered.
inline std::vector<ResolverAssessment> build_resolver_dataset(
    Transport& t, const std::vector<ResolverEndpoint>& candidates, ProbeDomainSource& source,
    const ProbeSchedule& sched = {}) {
    const uint32_t T = sched.probe_ttl;
    const uint32_t delta = sched.delta();
    const size_t n = candidates.size();

    std::vector<ResolverAssessment> out(n);
    for (size_t i = 0; i < n; ++i) out[i].endpoint = candidates[i];

    std::vector<size_t> live(n);
    for (size_t i = 0; i < n; ++i) live[i] = i;

    // names are drawn sequentially up front so parallel probing can't race
    // the source; results arrive via the shared assessment slots
    auto run_phase = [&](auto&& probe_one) {
        std::vector<DomainCandidate> names(live.size());
        for (size_t k = 0; k < live.size(); ++k) names[k] = source.fresh(T);
        detail::for_each_limited(live.size(), t.max_parallelism(),
                                 [&](size_t k) { probe_one(out[live[k]], names[k]); });
        std::vector<size_t> still;
        for (size_t i : live)
            if (out[i].stages.back().passed) still.push_back(i);
        live = std::move(still);
    };

    // stage 1: does it resolve recursively at all
    run_phase([&](ResolverAssessment& a, const DomainCandidate& d) {
        auto got = t.query(a.endpoint, {d.name, rrtype::A, QueryMode::Recursive});
        a.stages.push_back({1, got.kind == OutcomeKind::Hit,
                            detail::outcome_note(t.now(), d.name, QueryMode::Recursive, got)});
    });

    // stage 2: does a write become readable without recursion
    run_phase([&](ResolverAssessment& a, const DomainCandidate& d) {
        t.query(a.endpoint, {d.name, rrtype::A, QueryMode::Recursive});
        auto got = t.query(a.endpoint, {d.name, rrtype::A, QueryMode::NonRecursive});
        a.stages.push_back({2, got.kind == OutcomeKind::Hit,
                            detail::outcome_note(t.now(), d.name, QueryMode::NonRecursive, got)});
    });

    // stage 3: is the cached TTL the authoritative one
    run_phase([&](ResolverAssessment& a, const DomainCandidate& d) {
        t.query(a.endpoint, {d.name, rrtype::A, QueryMode::Recursive});
        auto got = t.query(a.endpoint, {d.name, rrtype::A, QueryMode::NonRecursive});
        bool ok = false;
        if (got.kind == OutcomeKind::Hit) {
            a.ttl_skew = int32_t(int64_t(got.remaining_ttl) - int64_t(d.ttl));
            ok = a.ttl_skew <= 2 && a.ttl_skew >= -2;
        }
        a.stages.push_back({3, ok, detail::outcome_note(t.now(), d.name, QueryMode::NonRecursive, got) +
                                       " expected=" + std::to_string(d.ttl)});
    });

    // stage 4: does the entry live exactly as long as promised, and do
    // non-recursive queries stay non-recursive
    std::vector<DomainCandidate> held(live.size()), fresh4(live.size());
    for (size_t k = 0; k < live.size(); ++k) held[k] = source.fresh(T);
    for (size_t k = 0; k < live.size(); ++k) fresh4[k] = source.fresh(T);
    const uint64_t wrote_at = t.now();
    detail::for_each_limited(live.size(), t.max_parallelism(), [&](size_t k) {
        t.query(candidates[live[k]], {held[k].name, rrtype::A, QueryMode::Recursive});
    });

    t.wait_until(wrote_at + T - delta);
    std::vector<uint8_t> early_hit(live.size(), 0);
    std::vector<std::string> early_note(live.size());
    detail::for_each_limited(live.size(), t.max_parallelism(), [&](size_t k) {
        auto got = t.query(candidates[live[k]], {held[k].name, rrtype::A, QueryMode::NonRecursive});
        early_hit[k] = got.kind == OutcomeKind::Hit;
        early_note[k] = detail::outcome_note(t.now(), held[k].name, QueryMode::NonRecursive, got);
    });

    t.wait_until(wrote_at + T + delta);
    detail::for_each_limited(live.size(), t.max_parallelism(), [&](size_t k) {
        ResolverAssessment& a = out[live[k]];
        auto late = t.query(a.endpoint, {held[k].name, rrtype::A, QueryMode::NonRecursive});
        auto virgin = t.query(a.endpoint, {fresh4[k].name, rrtype::A, QueryMode::NonRecursive});
        bool ok = early_hit[k] && late.kind == OutcomeKind::Miss &&
                  virgin.kind == OutcomeKind::Miss;
        a.stages.push_back(
            {4, ok,
             early_note[k] + "; " + detail::outcome_note(t.now(), held[k].name, QueryMode::NonRecursive, late) +
                 "; " + detail::outcome_note(t.now(), fresh4[k].name, QueryMode::NonRecursive, virgin)});
    });

    return out;
}

inline ResolverAssessment probe_resolver(Transport& t, const ResolverEndpoint& ep,
                                         ProbeDomainSource& source, const ProbeSchedule& sched = {}) {
    if (source.remaining(sched.probe_ttl) < 8)
        throw InsufficientDomains("need at least 8 fresh probe domains per resolver");
    return build_resolver_dataset(t, {ep}, source, sched)[0];
}

// ---------------------------------------------------------------------------
// dataset persistence

struct DatasetRecord {
    ResolverEndpoint endpoint;
    int rejected_stage = 0; // 0 means reliable
    int32_t ttl_skew = 0;

    bool reliable() const { return rejected_stage == 0; }
    bool operator==(const DatasetRecord&) const = default;
};

inline DatasetRecord to_record(const ResolverAssessment& a) {
    return {a.endpoint, a.rejected_stage(), a.ttl_skew};
}

inline constexpr const char* kDatasetHeader = "# ephpub-dataset v1";
inline constexpr const char* kPoolHeader = "# ephpub-pool v1";

inline std::string format_dataset(const std::vector<DatasetRecord>& records) {
    std::ostringstream os;
    os << kDatasetHeader << "\n";
    for (const auto& r : records) {
        os << ipv4_string(r.endpoint.addr) << ' ' << r.endpoint.port << ' ';
        if (r.reliable()) os << "reliable";
        else os << "rejected" << r.rejected_stage;
        os << ' ' << r.ttl_skew << "\n";
    }
    return os.str();
}

inline std::vector<DatasetRecord> parse_dataset(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kDatasetHeader)
        throw ParseError("bad dataset header", 0);
    std::vector<DatasetRecord> out;
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string addr, cls;
        unsigned port;
        int64_t skew;
        if (!(ls >> addr >> port >> cls >> skew) || port > 65535)
            throw ParseError("bad dataset line " + std::to_string(lineno), lineno);
        DatasetRecord r;
        r.endpoint = ResolverEndpoint::parse(addr + ":" + std::to_string(port));
        if (cls == "reliable") r.rejected_stage = 0;
        else if (cls.starts_with("rejected") && cls.size() == 9 && cls[8] >= '1' && cls[8] <= '4')
            r.rejected_stage = cls[8] - '0';
        else
            throw ParseError("bad classification '" + cls + "' on line " + std::to_string(lineno),
                             lineno);
        r.ttl_skew = int32_t(skew);
        out.push_back(r);
    }
    return out;
}

// Refresh semantics: a newer assessment of the same endpoint replaces the
// old row in place; unseen endpoints append in their incoming order.
inline std::vector<DatasetRecord> merge_records(std::vector<DatasetRecord> base,
                                                const std::vector<DatasetRecord>& fresh) {
    std::map<ResolverEndpoint, size_t> where;
    for (size_t i = 0; i < base.size(); ++i) where[base[i].endpoint] = i;
    for (const auto& r : fresh) {
        auto it = where.find(r.endpoint);
        if (it != where.end()) base[it->second] = r;
        else {
            where[r.endpoint] = base.size();
            base.push_back(r);
        }
    }
    return base;
}

inline std::vector<ResolverEndpoint> reliable_endpoints(const std::vector<DatasetRecord>& records) {
    std::vector<ResolverEndpoint> out;
    for (const auto& r : records)
        if (r.reliable()) out.push_back(r.endpoint);
    return out;
}

// ---------------------------------------------------------------------------
// domain pool persistence

inline std::string format_pool(const std::vector<DomainCandidate>& pool) {
    std::ostringstream os;
    os << kPoolHeader << "\n";
    for (const auto& d : pool)
        os << d.name << ' ' << d.ttl << ' ' << ipv4_string(d.source_ip) << "\n";
    return os.str();
}

inline std::vector<DomainCandidate> parse_pool(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kPoolHeader)
        throw ParseError("bad pool header", 0);
    std::vector<DomainCandidate> out;
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name, ip;
        int64_t ttl;
        if (!(ls >> name >> ttl >> ip) || ttl <= 0 || ttl > int64_t(UINT32_MAX))
            throw ParseError("bad pool line " + std::to_string(lineno), lineno);
        out.push_back({name, uint32_t(ttl), ipv4_parse(ip)});
    }
    return out;
}

inline std::vector<DomainCandidate> merge_pool(std::vector<DomainCandidate> base,
                                               const std::vector<DomainCandidate>& fresh) {
    std::map<std::string, size_t> where;
    for (size_t i = 0; i < base.size(); ++i) where[base[i].name] = i;
    for (const auto& d : fresh) {
        auto it = where.find(d.name);
        if (it != where.end()) base[it->second] = d;
        else {
            where[d.name] = base.size();
            base.push_back(d);
        }
    }
    return base;
}

inline std::string slurp_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline void spit_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path);
    f << text;
}

// ---------------------------------------------------------------------------
// harvesting

struct HarvestResult {
    std::vector<DomainCandidate> pool;
    size_t attempts = 0;
    size_t resolved = 0; // reverse and forward lookups both answered
    std::map<uint32_t, size_t> bucket_counts;
};

// Random IP, reverse lookup through the recursor, forward lookup of the
// returned host to learn its authoritative TTL.  With `ttl_buckets` set,
// only those TTLs are pooled (counts are kept per requested bucket, zeros
// included so the caller can warn); otherwise everything resolvable goes in.
inline HarvestResult harvest_domains(Transport& t, const ResolverEndpoint& recursor, size_t count,
                                     const std::vector<uint32_t>& ttl_buckets, RandomSource& rng) {
    HarvestResult res;
    for (uint32_t b : ttl_buckets) res.bucket_counts[b] = 0;
    std::set<uint32_t> seen;
    for (size_t i = 0; i < count; ++i) {
        res.attempts++;
        uint32_t ip = uint32_t(rng.next_u64());
        if (!seen.insert(ip).second) continue;

        auto rev = t.query(recursor, {sim::AuthoritativeUniverse::reverse_name(ip), rrtype::PTR,
                                      QueryMode::Recursive});
        if (rev.kind != OutcomeKind::Hit || rev.rdata.empty()) continue;

        auto fwd = t.query(recursor, {rev.rdata, rrtype::A, QueryMode::Recursive});
        if (fwd.kind != OutcomeKind::Hit || fwd.remaining_ttl == 0) continue;
        res.resolved++;

        uint32_t ttl = fwd.remaining_ttl;
        if (!ttl_buckets.empty() && !res.bucket_counts.count(ttl)) continue;
        res.bucket_counts[ttl]++;
        res.pool.push_back({rev.rdata, ttl, ip});
    }
    return res;
}

} // namespace ephpub
