#include <catch2/catch_amalgamated.hpp>

#include <ephpub/simnet.hpp>

using namespace ephpub;
using namespace ephpub::sim;

namespace {

SimConfig small_config(uint64_t seed = 5, size_t n = 8, const std::string& profile = "compliant") {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.start_time = 1'699'999'200; // multiple of the default flush interval
    cfg.population.push_back({BehaviorProfile::preset(profile), n});
    return cfg;
}

DnsQuestion rd1(const std::string& name) { return {name, rrtype::A, QueryMode::Recursive}; }
DnsQuestion rd0(const std::string& name) { return {name, rrtype::A, QueryMode::NonRecursive}; }

} // namespace

TEST_CASE("write one read one: cache presence encodes a bit") {
    SimFabric fab(small_config());
    auto ep = fab.endpoints()[0];
    auto name = fab.universe().host_name(0x01020304);
    uint32_t ttl = fab.universe().ttl_of_host(name);

    // unwritten cell reads as zero
    CHECK(fab.query(ep, rd0(name)).kind == OutcomeKind::Miss);

    auto wrote = fab.query(ep, rd1(name));
    REQUIRE(wrote.kind == OutcomeKind::Hit);
    CHECK(wrote.remaining_ttl == ttl);

    auto read = fab.query(ep, rd0(name));
    REQUIRE(read.kind == OutcomeKind::Hit);
    CHECK(read.remaining_ttl == ttl);

    fab.advance(ttl / 2);
    CHECK(fab.query(ep, rd0(name)).remaining_ttl == ttl - ttl / 2);

    // a different resolver never saw the write
    CHECK(fab.query(fab.endpoints()[1], rd0(name)).kind == OutcomeKind::Miss);
}

TEST_CASE("entry answers with TTL zero at the expiry boundary, then misses") {
    SimFabric fab(small_config());
    auto ep = fab.endpoints()[0];
    auto name = fab.universe().host_name(77);
    uint32_t ttl = fab.universe().ttl_of_host(name);

    fab.query(ep, rd1(name));
    fab.advance(ttl);
    auto at_boundary = fab.query(ep, rd0(name));
    CHECK(at_boundary.kind == OutcomeKind::Hit);
    CHECK(at_boundary.remaining_ttl == 0);

    fab.advance(1);
    CHECK(fab.query(ep, rd0(name)).kind == OutcomeKind::Miss);
}

TEST_CASE("recursive re-query serves from cache without refreshing the clock") {
    SimFabric fab(small_config());
    auto ep = fab.endpoints()[0];
    auto name = fab.universe().host_name(424242);
    uint32_t ttl = fab.universe().ttl_of_host(name);

    fab.query(ep, rd1(name));
    fab.advance(500);
    auto again = fab.query(ep, rd1(name));
    REQUIRE(again.kind == OutcomeKind::Hit);
    CHECK(again.remaining_ttl == ttl - 500); // no refresh: old entry served
    CHECK(fab.query(ep, rd0(name)).remaining_ttl == ttl - 500);
}

TEST_CASE("restart wipes entries written at or before it, later writes survive") {
    SimFabric fab(small_config());
    auto ep = fab.endpoints()[0];
    auto a = fab.universe().host_name(1001);
    auto b = fab.universe().host_name(1002);
    uint64_t t0 = fab.now();

    fab.query(ep, rd1(a));
    fab.schedule_restart(ep, t0 + 50);
    fab.advance(100);
    fab.query(ep, rd1(b));

    CHECK(fab.query(ep, rd0(a)).kind == OutcomeKind::Miss);
    CHECK(fab.query(ep, rd0(b)).kind == OutcomeKind::Hit);
}

TEST_CASE("multiple restarts fire in order during one advance") {
    SimFabric fab(small_config());
    auto ep = fab.endpoints()[0];
    auto a = fab.universe().host_name(2001);
    uint64_t t0 = fab.now();

    fab.query(ep, rd1(a));
    fab.schedule_restart(ep, t0 + 10);
    fab.schedule_restart(ep, t0 + 20);
    fab.advance(30);
    CHECK(fab.query(ep, rd0(a)).kind == OutcomeKind::Miss);
    CHECK(fab.at(ep).cache_size(fab.now()) == 0);
}

TEST_CASE("expired entries linger until the flush boundary sweeps them") {
    auto cfg = small_config();
    SimFabric fab(cfg);
    auto ep = fab.endpoints()[0];
    // pick a probe name so the TTL is small and controlled
    std::string name = AuthoritativeUniverse::probe_name(1, 100);

    fab.query(ep, rd1(name));
    fab.advance(200); // expired, but no flush boundary crossed yet
    CHECK(fab.query(ep, rd0(name)).kind == OutcomeKind::Miss);
    CHECK(fab.at(ep).cache_size(fab.now()) == 1);

    fab.advance(3400); // crosses start+3600
    CHECK(fab.at(ep).cache_size(fab.now()) == 0);
}

TEST_CASE("identical configurations replay identically") {
    auto run = [](SimFabric& fab) {
        std::vector<std::string> log;
        auto eps = fab.endpoints();
        for (int i = 0; i < 40; ++i) {
            auto ep = eps[i % eps.size()];
            auto name = fab.universe().host_name(uint32_t(9000 + i % 7));
            auto out = fab.query(ep, i % 3 ? rd0(name) : rd1(name));
            log.push_back(std::string(to_string(out.kind)) + "/" +
                          std::to_string(out.remaining_ttl) + "/" + std::to_string(out.rtt_ms));
            if (i == 20) fab.advance(1800);
        }
        return log;
    };
    SimFabric f1(small_config(99, 5)), f2(small_config(99, 5));
    CHECK(run(f1) == run(f2));
    REQUIRE(f1.transcript().size() == f2.transcript().size());
    for (size_t i = 0; i < f1.transcript().size(); ++i) {
        CHECK(f1.transcript()[i].qname == f2.transcript()[i].qname);
        CHECK(f1.transcript()[i].result == f2.transcript()[i].result);
    }
}

TEST_CASE("behavior profiles depart from compliance in the advertised way") {
    SimConfig cfg = small_config(7, 1, "compliant");
    cfg.population.push_back({BehaviorProfile::preset("no_recursion"), 1});
    cfg.population.push_back({BehaviorProfile::preset("no_cache"), 1});
    cfg.population.push_back({BehaviorProfile::preset("no_rd0"), 1});
    cfg.population.push_back({BehaviorProfile::preset("rd0_recursive"), 1});
    cfg.population.push_back({BehaviorProfile::preset("ttl_clamp"), 1});
    cfg.population.push_back({BehaviorProfile::preset("short_residency"), 1});
    SimFabric fab(cfg);

    auto by_profile = [&](const std::string& name) -> ResolverEndpoint {
        for (auto& ep : fab.endpoints())
            if (fab.at(ep).profile().name == name) return ep;
        throw std::runtime_error("profile not placed");
    };
    auto host = fab.universe().host_name(31337);
    uint32_t ttl = fab.universe().ttl_of_host(host);

    SECTION("no_recursion refuses writes but still answers reads") {
        auto ep = by_profile("no_recursion");
        CHECK(fab.query(ep, rd1(host)).kind == OutcomeKind::Refused);
        CHECK(fab.query(ep, rd0(host)).kind == OutcomeKind::Miss);
    }
    SECTION("no_cache answers recursively but retains nothing") {
        auto ep = by_profile("no_cache");
        CHECK(fab.query(ep, rd1(host)).kind == OutcomeKind::Hit);
        CHECK(fab.query(ep, rd0(host)).kind == OutcomeKind::Miss);
    }
    SECTION("no_rd0 refuses cache reads") {
        auto ep = by_profile("no_rd0");
        fab.query(ep, rd1(host));
        CHECK(fab.query(ep, rd0(host)).kind == OutcomeKind::Refused);
    }
    SECTION("rd0_recursive resolves even without the recursion bit") {
        auto ep = by_profile("rd0_recursive");
        auto out = fab.query(ep, rd0(host));
        CHECK(out.kind == OutcomeKind::Hit);
        CHECK(out.remaining_ttl == ttl);
    }
    SECTION("ttl_clamp reports its own TTL instead of the authoritative one") {
        auto ep = by_profile("ttl_clamp");
        CHECK(fab.query(ep, rd1(host)).remaining_ttl == 300);
        CHECK(fab.query(ep, rd0(host)).remaining_ttl == 300);
    }
    SECTION("short_residency drops entries early yet reports full TTL") {
        auto ep = by_profile("short_residency");
        REQUIRE(ttl > 1800);
        CHECK(fab.query(ep, rd1(host)).remaining_ttl == ttl);
        CHECK(fab.query(ep, rd0(host)).remaining_ttl == ttl);
        fab.advance(1801);
        CHECK(fab.query(ep, rd0(host)).kind == OutcomeKind::Miss);
    }
}

TEST_CASE("unreachable resolvers time out after every retry") {
    SimFabric fab(small_config(11, 2, "unreachable"));
    auto ep = fab.endpoints()[0];
    auto out = fab.query(ep, rd1(fab.universe().host_name(5)));
    CHECK(out.kind == OutcomeKind::Timeout);
    CHECK(fab.transcript().size() == 3); // initial try plus two retries
}

TEST_CASE("universe resolves reverse then forward deterministically") {
    AuthoritativeUniverse u({.seed = 21, .resolvable_fraction = 1.0});
    uint32_t ip = 0x7B2D0C01; // 123.45.12.1
    auto rev = AuthoritativeUniverse::reverse_name(ip);
    CHECK(rev == "1.12.45.123.in-addr.arpa");

    auto ptr = u.lookup(rev, rrtype::PTR);
    REQUIRE(ptr.has_value());
    auto fwd = u.lookup(ptr->rdata, rrtype::A);
    REQUIRE(fwd.has_value());
    CHECK(fwd->rdata == "123.45.12.1");
    CHECK(fwd->ttl == u.ttl_of_host(ptr->rdata));

    CHECK_FALSE(u.lookup("nonsense.name.invalid", rrtype::A).has_value());
    CHECK_FALSE(u.lookup("h!!bad.oakmesh.net", rrtype::A).has_value());
}

TEST_CASE("resolvable fraction thins the reverse map") {
    AuthoritativeUniverse u({.seed = 33, .resolvable_fraction = 0.5});
    int hits = 0;
    for (uint32_t i = 0; i < 2000; ++i)
        if (u.ip_resolvable(0x08000000 + i * 977)) ++hits;
    CHECK(hits > 900);
    CHECK(hits < 1100);
}

TEST_CASE("host TTLs follow the weight table with one-day dominant") {
    AuthoritativeUniverse u({.seed = 3});
    std::map<uint32_t, int> buckets;
    for (uint32_t i = 0; i < 4000; ++i)
        buckets[u.ttl_of_host(u.host_name(i * 2654435761u))]++;
    auto top = std::max_element(buckets.begin(), buckets.end(),
                                [](auto& a, auto& b) { return a.second < b.second; });
    CHECK(top->first == 86400);
    for (auto& [ttl, n] : buckets) CHECK(ttl <= 604800);
}

TEST_CASE("probe names resolve with the TTL baked into the label") {
    AuthoritativeUniverse u({.seed = 9});
    auto rec = u.lookup(AuthoritativeUniverse::probe_name(17, 4242), rrtype::A);
    REQUIRE(rec.has_value());
    CHECK(rec->ttl == 4242);
}

TEST_CASE("compromise marking selects the requested share exactly") {
    SimFabric fab(small_config(13, 1000));
    fab.mark_compromised(0.1);
    CHECK(fab.compromised_count() == 100);
    size_t flagged = 0;
    for (auto& ep : fab.endpoints())
        if (fab.is_compromised(ep)) ++flagged;
    CHECK(flagged == 100);
    CHECK_FALSE(fab.is_compromised(fab.local_recursor()));
}

TEST_CASE("waiting never moves the clock backwards") {
    SimFabric fab(small_config());
    uint64_t t0 = fab.now();
    fab.wait_until(t0 + 100);
    CHECK(fab.now() == t0 + 100);
    fab.wait_until(t0);
    CHECK(fab.now() == t0 + 100);
}
