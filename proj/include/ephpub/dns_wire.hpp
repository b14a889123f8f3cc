#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>

#include "common.hpp"

namespace ephpub {

// Whether the RD bit is set.  Recursive queries ask the resolver to fetch
// and cache; non-recursive ones only inspect what it already holds.
enum class QueryMode : uint8_t { Recursive, NonRecursive };

namespace rrtype {
inline constexpr uint16_t A = 1;
inline constexpr uint16_t NS = 2;
inline constexpr uint16_t CNAME = 5;
inline constexpr uint16_t PTR = 12;
} // namespace rrtype

struct DnsQuestion {
    std::string qname;
    uint16_t qtype = rrtype::A;
    QueryMode mode = QueryMode::Recursive;
};

enum class OutcomeKind : uint8_t { Hit, Miss, Timeout, Refused };

inline const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::Hit: return "hit";
        case OutcomeKind::Miss: return "miss";
        case OutcomeKind::Timeout: return "timeout";
        case OutcomeKind::Refused: return "refused";
    }
    return "?";
}

struct QueryOutcome {
    OutcomeKind kind = OutcomeKind::Timeout;
    uint32_t remaining_ttl = 0;  // meaningful only for Hit
    std::string rdata;           // first answer, textual (A dotted quad, PTR name)
    double rtt_ms = 0.0;

    bool hit() const { return kind == OutcomeKind::Hit; }
};

struct ResolverEndpoint {
    uint32_t addr = 0; // IPv4, host byte order
    uint16_t port = 53;

    auto operator<=>(const ResolverEndpoint&) const = default;

    std::string to_string() const {
        return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xFF) + "." +
               std::to_string((addr >> 8) & 0xFF) + "." + std::to_string(addr & 0xFF) +
               (port == 53 ? std::string() : ":" + std::to_string(port));
    }

    static ResolverEndpoint parse(const std::string& text) {
        ResolverEndpoint ep;
        uint32_t parts[4] = {0, 0, 0, 0};
        size_t i = 0;
        int p = 0;
        for (; i < text.size() && p < 4; ++i) {
            char c = text[i];
            if (c >= '0' && c <= '9') {
                parts[p] = parts[p] * 10 + uint32_t(c - '0');
                if (parts[p] > 255) throw InputError("bad IPv4 octet: " + text);
            } else if (c == '.') {
                ++p;
            } else {
                break;
            }
        }
        if (p != 3) throw InputError("bad IPv4 address: " + text);
        ep.addr = parts[0] << 24 | parts[1] << 16 | parts[2] << 8 | parts[3];
        if (i < text.size()) {
            if (text[i] != ':') throw InputError("bad endpoint: " + text);
            uint32_t port = 0;
            for (++i; i < text.size(); ++i) {
                if (text[i] < '0' || text[i] > '9') throw InputError("bad port: " + text);
                port = port * 10 + uint32_t(text[i] - '0');
                if (port > 65535) throw InputError("bad port: " + text);
            }
            if (port == 0) throw InputError("bad port: " + text);
            ep.port = uint16_t(port);
        }
        return ep;
    }
};

// Harvested names are queried by their own record type.
inline uint16_t qtype_for(const std::string& name) {
    return name.ends_with(".in-addr.arpa") ? rrtype::PTR : rrtype::A;
}

inline std::string ipv4_string(uint32_t addr) { return ResolverEndpoint{addr, 53}.to_string(); }

inline uint32_t ipv4_parse(const std::string& text) {
    if (text.find(':') != std::string::npos) throw InputError("bare IPv4 expected: " + text);
    return ResolverEndpoint::parse(text).addr;
}

// --- RFC 1035 message encoding -------------------------------------------

namespace detail {

inline void append_qname(bytes& out, const std::string& name) {
    if (name.empty() || name.size() > 253)
        throw InputError("qname length invalid: " + name);
    size_t start = 0;
    while (start <= name.size()) {
        size_t dot = name.find('.', start);
        size_t end = dot == std::string::npos ? name.size() : dot;
        size_t len = end - start;
        if (len == 0 || len > 63)
            throw InputError("qname label length invalid: " + name);
        out.push_back(uint8_t(len));
        out.insert(out.end(), name.begin() + long(start), name.begin() + long(end));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    out.push_back(0);
}

// Name decompression with a jump budget so pointer loops cannot hang us.
inline std::string read_name(byte_view msg, size_t& pos) {
    std::string name;
    size_t p = pos;
    bool jumped = false;
    int jumps = 0;
    for (;;) {
        if (p >= msg.size()) throw ParseError("name runs past message end", p);
        uint8_t len = msg[p];
        if ((len & 0xC0) == 0xC0) {
            if (p + 1 >= msg.size()) throw ParseError("truncated compression pointer", p);
            size_t target = size_t(len & 0x3F) << 8 | msg[p + 1];
            if (!jumped) pos = p + 2;
            jumped = true;
            if (++jumps > 32) throw ParseError("compression pointer loop", p);
            if (target >= msg.size()) throw ParseError("compression pointer out of range", p);
            p = target;
            continue;
        }
        if (len & 0xC0) throw ParseError("reserved label type", p);
        if (len == 0) {
            if (!jumped) pos = p + 1;
            return name;
        }
        if (p + 1 + len > msg.size()) throw ParseError("label runs past message end", p);
        if (!name.empty()) name.push_back('.');
        name.append(reinterpret_cast<const char*>(msg.data() + p + 1), len);
        if (name.size() > 253) throw ParseError("name too long", p);
        p += 1 + len;
    }
}

} // namespace detail

// Query serialization: fixed header, one question, no EDNS.  The RD bit is
// the only thing that distinguishes a cache write from a cache read.
inline bytes encode_query(const DnsQuestion& q, uint16_t txid) {
    bytes out;
    put_u16(out, txid);
    put_u16(out, q.mode == QueryMode::Recursive ? 0x0100 : 0x0000);
    put_u16(out, 1); // QDCOUNT
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, 0);
    detail::append_qname(out, q.qname);
    put_u16(out, q.qtype);
    put_u16(out, 1); // IN
    return out;
}

namespace rcode {
inline constexpr uint8_t NOERROR = 0;
inline constexpr uint8_t NXDOMAIN = 3;
inline constexpr uint8_t REFUSED = 5;
} // namespace rcode

// Classify a response into the cache-probing alphabet.  Hit means at least
// one answer record (remaining TTL attached, zero allowed); NXDOMAIN and
// empty answers are Miss; REFUSED and other failure rcodes map to Refused.
// Anything structurally wrong, including a transaction id mismatch, throws.
inline QueryOutcome parse_response(byte_view msg, uint16_t expected_txid) {
    if (msg.size() < 12) throw ParseError("short header", msg.size());
    ByteReader rd(msg);
    uint16_t txid = rd.u16();
    if (txid != expected_txid) throw ParseError("transaction id mismatch", 0);
    uint16_t flags = rd.u16();
    if (!(flags & 0x8000)) throw ParseError("not a response", 2);
    uint8_t rc = flags & 0x0F;
    uint16_t qdcount = rd.u16();
    uint16_t ancount = rd.u16();
    rd.u16(); // NSCOUNT
    rd.u16(); // ARCOUNT

    if (rc == rcode::NXDOMAIN) return {OutcomeKind::Miss, 0, "", 0.0};
    if (rc != rcode::NOERROR) return {OutcomeKind::Refused, 0, "", 0.0};

    size_t pos = 12;
    for (uint16_t i = 0; i < qdcount; ++i) {
        detail::read_name(msg, pos);
        if (pos + 4 > msg.size()) throw ParseError("truncated question", pos);
        pos += 4;
    }
    if (ancount == 0) return {OutcomeKind::Miss, 0, "", 0.0};

    detail::read_name(msg, pos);
    if (pos + 10 > msg.size()) throw ParseError("truncated answer", pos);
    uint16_t rtype = uint16_t(msg[pos] << 8 | msg[pos + 1]);
    uint32_t ttl = uint32_t(msg[pos + 4]) << 24 | uint32_t(msg[pos + 5]) << 16 |
                   uint32_t(msg[pos + 6]) << 8 | msg[pos + 7];
    uint16_t rdlength = uint16_t(msg[pos + 8] << 8 | msg[pos + 9]);
    pos += 10;
    if (pos + rdlength > msg.size()) throw ParseError("truncated rdata", pos);

    std::string data;
    if (rtype == rrtype::A && rdlength == 4) {
        data = std::to_string(msg[pos]) + "." + std::to_string(msg[pos + 1]) + "." +
               std::to_string(msg[pos + 2]) + "." + std::to_string(msg[pos + 3]);
    } else if (rtype == rrtype::PTR || rtype == rrtype::CNAME || rtype == rrtype::NS) {
        size_t rp = pos;
        data = detail::read_name(msg, rp);
    }
    return {OutcomeKind::Hit, ttl, data, 0.0};
}

// Answer encoding, used by the simulator and the loopback test server.
inline bytes encode_response(const DnsQuestion& q, uint16_t txid, uint8_t rc,
                             const std::string& rdata, uint32_t ttl, bool recursion_available = true) {
    bool answer = rc == rcode::NOERROR && !rdata.empty();
    bytes out;
    put_u16(out, txid);
    uint16_t flags = 0x8000 | (q.mode == QueryMode::Recursive ? 0x0100 : 0x0000) | rc;
    if (recursion_available) flags |= 0x0080;
    put_u16(out, flags);
    put_u16(out, 1);
    put_u16(out, answer ? 1 : 0);
    put_u16(out, 0);
    put_u16(out, 0);
    detail::append_qname(out, q.qname);
    put_u16(out, q.qtype);
    put_u16(out, 1);
    if (answer) {
        put_u16(out, 0xC00C); // pointer to the question name
        put_u16(out, q.qtype);
        put_u16(out, 1);
        put_u32(out, ttl);
        if (q.qtype == rrtype::A) {
            ResolverEndpoint ip = ResolverEndpoint::parse(rdata);
            put_u16(out, 4);
            put_u32(out, ip.addr);
        } else {
            bytes name;
            detail::append_qname(name, rdata);
            put_u16(out, uint16_t(name.size()));
            out.insert(out.end(), name.begin(), name.end());
        }
    }
    return out;
}

// Transport contract shared by the real UDP backend and the simulator.
// query() performs the full retry cycle internally and never throws for
// network-level failures; those come back as Timeout/Refused outcomes.
class Transport {
public:
    virtual ~Transport() = default;

    virtual QueryOutcome query(const ResolverEndpoint& to, const DnsQuestion& q) = 0;

    // Seconds since the epoch, wall or virtual.
    virtual uint64_t now() = 0;

    // Block (or advance the virtual clock) until the given time.
    virtual void wait_until(uint64_t t) = 0;

    virtual unsigned max_parallelism() const { return 1; }
};

} // namespace ephpub
