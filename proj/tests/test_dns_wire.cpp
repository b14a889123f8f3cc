#include <catch2/catch_amalgamated.hpp>

#include <ephpub/dns_wire.hpp>
#include <ephpub/random.hpp>

using namespace ephpub;

TEST_CASE("query encoding matches hand-assembled reference bytes") {
    DnsQuestion q{"a.b", rrtype::A, QueryMode::Recursive};
    bytes expected = {0x12, 0x34, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00,
                      0x00, 0x01, 'a',  0x01, 'b',  0x00, 0x00, 0x01, 0x00, 0x01};
    CHECK(encode_query(q, 0x1234) == expected);

    q.mode = QueryMode::NonRecursive;
    bytes got = encode_query(q, 0x1234);
    expected[2] = 0x00; // only the RD bit moves
    CHECK(got == expected);
}

TEST_CASE("recursion desired flag survives an encode/parse cycle") {
    SeededRandom rng(3);
    const char* names[] = {"example.com", "cache-probe.test.org", "x.y.z.w.v.u.t"};
    for (int t = 0; t < 60; ++t) {
        DnsQuestion q;
        q.qname = names[rng.below(3)];
        q.mode = rng.chance(0.5) ? QueryMode::Recursive : QueryMode::NonRecursive;
        auto wire = encode_query(q, uint16_t(rng.below(65536)));
        bool rd = (wire[2] & 0x01) != 0;
        CHECK(rd == (q.mode == QueryMode::Recursive));
    }
}

TEST_CASE("qname validation rejects malformed names") {
    auto enc = [](const std::string& n) { return encode_query({n, rrtype::A, QueryMode::Recursive}, 1); };
    CHECK_THROWS_AS(enc(""), InputError);
    CHECK_THROWS_AS(enc("a..b"), InputError);
    CHECK_THROWS_AS(enc(std::string(64, 'x') + ".com"), InputError);
    CHECK_THROWS_AS(enc([] {
                        std::string s;
                        for (int i = 0; i < 40; ++i) s += "sevenchr.";
                        return s + "com"; // 363 octets total
                    }()),
                    InputError);
    CHECK_NOTHROW(enc(std::string(63, 'x') + ".com"));
}

namespace {

// Hand-built NOERROR response for "x.example" A with one answer
// (TTL 3600, 93.184.216.34) using a compression pointer for the owner.
bytes reference_hit_response() {
    return {
        0xAB, 0xCD, 0x81, 0x80, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00,
        0x01, 'x',  0x07, 'e',  'x',  'a',  'm',  'p',  'l',  'e',  0x00,
        0x00, 0x01, 0x00, 0x01,
        0xC0, 0x0C, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x0E, 0x10, 0x00, 0x04,
        0x5D, 0xB8, 0xD8, 0x22,
    };
}

} // namespace

TEST_CASE("answer responses classify as Hit with the remaining TTL") {
    auto msg = reference_hit_response();
    auto out = parse_response(msg, 0xABCD);
    CHECK(out.kind == OutcomeKind::Hit);
    CHECK(out.remaining_ttl == 3600);
    CHECK(out.rdata == "93.184.216.34");
}

TEST_CASE("zero remaining TTL still counts as a Hit") {
    auto msg = reference_hit_response();
    msg[35] = msg[36] = 0; // TTL -> 0
    auto out = parse_response(msg, 0xABCD);
    CHECK(out.kind == OutcomeKind::Hit);
    CHECK(out.remaining_ttl == 0);
}

TEST_CASE("rcode and answer-count mapping") {
    DnsQuestion q{"probe.example", rrtype::A, QueryMode::NonRecursive};

    auto empty = encode_response(q, 7, rcode::NOERROR, "", 0);
    CHECK(parse_response(empty, 7).kind == OutcomeKind::Miss);

    auto nx = encode_response(q, 7, rcode::NXDOMAIN, "", 0);
    CHECK(parse_response(nx, 7).kind == OutcomeKind::Miss);

    auto refused = encode_response(q, 7, rcode::REFUSED, "", 0);
    CHECK(parse_response(refused, 7).kind == OutcomeKind::Refused);

    auto servfail = encode_response(q, 7, 2, "", 0);
    CHECK(parse_response(servfail, 7).kind == OutcomeKind::Refused);
}

TEST_CASE("ptr answers carry the target name") {
    DnsQuestion q{"4.3.2.1.in-addr.arpa", rrtype::PTR, QueryMode::Recursive};
    auto msg = encode_response(q, 99, rcode::NOERROR, "host.provider.net", 86400);
    auto out = parse_response(msg, 99);
    CHECK(out.kind == OutcomeKind::Hit);
    CHECK(out.remaining_ttl == 86400);
    CHECK(out.rdata == "host.provider.net");
}

TEST_CASE("structural defects raise ParseError") {
    auto msg = reference_hit_response();

    CHECK_THROWS_AS(parse_response(msg, 0x1111), ParseError); // txid mismatch

    auto query_not_response = msg;
    query_not_response[2] = 0x01; // QR cleared
    CHECK_THROWS_AS(parse_response(query_not_response, 0xABCD), ParseError);

    bytes tiny(msg.begin(), msg.begin() + 11);
    CHECK_THROWS_AS(parse_response(tiny, 0xABCD), ParseError);

    bytes cut(msg.begin(), msg.begin() + 30); // answer chopped mid-record
    CHECK_THROWS_AS(parse_response(cut, 0xABCD), ParseError);

    auto bad_rdlen = msg;
    bad_rdlen[37] = 0xFF; // rdlength says 255, message ends first
    CHECK_THROWS_AS(parse_response(bad_rdlen, 0xABCD), ParseError);
}

TEST_CASE("compression pointer loops terminate with an error") {
    // question name at offset 12 points to 14, which points back to 12
    bytes msg = {
        0x00, 0x01, 0x81, 0x80, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00,
        0xC0, 0x0E, 0xC0, 0x0C, 0x00, 0x01, 0x00, 0x01,
    };
    CHECK_THROWS_AS(parse_response(msg, 1), ParseError);
}

TEST_CASE("endpoint text form parses and prints") {
    auto ep = ResolverEndpoint::parse("192.168.7.13");
    CHECK(ep.addr == 0xC0A8070D);
    CHECK(ep.port == 53);
    CHECK(ep.to_string() == "192.168.7.13");

    auto ep2 = ResolverEndpoint::parse("8.8.4.4:5353");
    CHECK(ep2.port == 5353);
    CHECK(ep2.to_string() == "8.8.4.4:5353");

    CHECK_THROWS_AS(ResolverEndpoint::parse("1.2.3"), InputError);
    CHECK_THROWS_AS(ResolverEndpoint::parse("1.2.3.400"), InputError);
    CHECK_THROWS_AS(ResolverEndpoint::parse("1.2.3.4:99999"), InputError);
    CHECK_THROWS_AS(ResolverEndpoint::parse("1.2.3.4:0"), InputError);
    CHECK(ResolverEndpoint::parse("1.2.3.4") < ResolverEndpoint::parse("1.2.3.5"));
}
