#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include <ephpub/adversary.hpp>
#include <ephpub/keystore.hpp>
#include <ephpub/simnet.hpp>

using namespace ephpub;
using namespace ephpub::sim;

namespace {

SimConfig base_config(size_t compliant, uint64_t seed = 7) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.start_time = 1'699'999'200; // on an hourly flush boundary
    cfg.population = {{BehaviorProfile::preset("compliant"), compliant}};
    return cfg;
}

// Candidate domains as a harvester would hand them over: forward names with
// their authoritative TTLs, mixed buckets.
std::vector<DomainCandidate> synth_pool(const AuthoritativeUniverse& u, size_t count) {
    std::vector<DomainCandidate> pool;
    pool.reserve(count);
    for (uint32_t ip = 0x0B000001; pool.size() < count; ++ip) {
        auto name = u.host_name(ip);
        pool.push_back({name, u.ttl_of_host(name), ip});
    }
    return pool;
}

size_t weight_of(const std::vector<uint8_t>& bits) {
    return size_t(std::count(bits.begin(), bits.end(), uint8_t(1)));
}

bytes msg(const std::string& s) { return bytes(s.begin(), s.end()); }

} // namespace

TEST_CASE("resolver selection is uniform and rejects short datasets") {
    std::vector<ResolverEndpoint> dataset;
    for (uint32_t i = 0; i < 100; ++i) dataset.push_back({0x0A000001 + i, 53});

    SeededRandom rng(31);
    auto picked = select_resolvers(dataset, 30, rng);
    REQUIRE(picked.size() == 30);
    std::set<ResolverEndpoint> uniq(picked.begin(), picked.end());
    CHECK(uniq.size() == 30);

    std::map<ResolverEndpoint, size_t> counts;
    for (int round = 0; round < 2000; ++round)
        for (const auto& ep : select_resolvers(dataset, 10, rng)) counts[ep]++;
    double expected = 2000.0 * 10 / 100;
    double chi2 = 0;
    for (const auto& ep : dataset) {
        double d = double(counts[ep]) - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 135.0); // 99 dof, far tail

    CHECK_THROWS_AS(select_resolvers(dataset, 101, rng), InsufficientDomains);
}

TEST_CASE("prefetch sibling shares the zone, not the cell") {
    CHECK(prefetch_sibling("h3x9.oakmesh.net") == "www.oakmesh.net");
    CHECK(prefetch_sibling("a.b.c.example.org") == "www.b.c.example.org");
    CHECK(prefetch_sibling("bare") == "www.bare");
}

TEST_CASE("cell placement prechecks candidates without recursion") {
    SimFabric fab(base_config(60));
    auto pool = synth_pool(fab.universe(), 600);
    auto eps = fab.endpoints();
    std::vector<ResolverEndpoint> targets(eps.begin(), eps.begin() + 20);

    KeystoreConfig cfg;
    SeededRandom rng(5);

    SECTION("placements are empty cells with the requested TTL") {
        EncodeStats stats;
        auto cells = select_domains(fab, targets, pool, 86400, cfg, rng, &stats);
        REQUIRE(cells.size() == targets.size());
        for (size_t i = 0; i < cells.size(); ++i) {
            CHECK(cells[i].resolver == targets[i]);
            CHECK(cells[i].expected_ttl == 86400);
        }
        CHECK(stats.prechecks >= cells.size());
        for (const auto& e : fab.transcript()) {
            CHECK(e.mode == QueryMode::NonRecursive);
            CHECK(fab.at(e.to).cache_size(fab.now()) == 0); // probes leave no trace
        }
    }

    SECTION("occupied cells are discarded in favour of fresh ones") {
        // fill ep0 with every fitting candidate except one survivor
        std::string survivor;
        uint64_t now = fab.now();
        for (const auto& d : pool) {
            if (d.ttl != 86400) continue;
            if (survivor.empty()) {
                survivor = d.name;
                continue;
            }
            fab.at(targets[0]).restore_entry(d.name, {"198.18.1.1", d.ttl, now, now + d.ttl, now + d.ttl});
        }
        cfg.precheck_budget = int(pool.size());
        auto cells = select_domains(fab, {targets[0]}, pool, 86400, cfg, rng);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].domain == survivor);

        size_t hits = 0;
        for (const auto& e : fab.transcript())
            if (e.result == OutcomeKind::Hit) ++hits;
        CHECK(hits > 0); // it really did trip over occupied cells on the way
    }

    SECTION("an exhausted precheck budget is an error, not a bad cell") {
        uint64_t now = fab.now();
        for (const auto& d : pool)
            if (d.ttl == 86400)
                fab.at(targets[0]).restore_entry(d.name,
                                                 {"198.18.1.1", d.ttl, now, now + d.ttl, now + d.ttl});
        CHECK_THROWS_AS(select_domains(fab, {targets[0]}, pool, 86400, cfg, rng),
                        InsufficientDomains);
    }

    SECTION("a TTL bucket the pool lacks is refused up front") {
        CHECK_THROWS_WITH(select_domains(fab, targets, pool, 500, cfg, rng),
                          Catch::Matchers::ContainsSubstring("no domains with requested TTL"));
        CHECK(fab.transcript().empty()); // no point probing anything
    }
}

TEST_CASE("bit IO: ones are recursive queries, zeros are silence") {
    SimFabric fab(base_config(4));
    auto eps = fab.endpoints();
    BitCell cell{eps[0], fab.universe().host_name(0x0C000001), 0};
    cell.expected_ttl = fab.universe().ttl_of_host(cell.domain);

    CHECK(write_bit(fab, cell, 0));
    CHECK(fab.transcript().empty());

    auto r0 = read_bit(fab, cell, 3);
    CHECK(r0.value == BitValue::Zero);

    CHECK(write_bit(fab, cell, 1));
    auto r1 = read_bit(fab, cell, 3);
    CHECK(r1.value == BitValue::One);
    CHECK(r1.position == 3);
    CHECK(r1.remaining_ttl == cell.expected_ttl);

    SECTION("refusal and silence map to erasure, never to a bit") {
        fab.at(eps[0]).set_profile(BehaviorProfile::preset("no_rd0"));
        CHECK(read_bit(fab, cell, 3).value == BitValue::Erasure);

        fab.at(eps[0]).set_profile(BehaviorProfile::preset("unreachable"));
        CHECK(read_bit(fab, cell, 3).value == BitValue::Erasure);
    }
}

TEST_CASE("publishing spreads the codeword and stays silent for zero bits") {
    SimFabric fab(base_config(400));
    auto pool = synth_pool(fab.universe(), 1500);
    auto dataset = fab.endpoints();
    KeystoreConfig cfg;
    SeededRandom rng(42);

    auto res = encode_message(fab, dataset, pool, msg("the quick brown fox"), 86400, cfg, rng);
    const auto& epo = res.epo;
    const auto& plan = res.plan;

    REQUIRE(epo.cells.size() == 176);
    CHECK(epo.expiry == fab.now() + 86400);
    CHECK(epo.expected_ttl() == 86400);

    std::set<ResolverEndpoint> uniq;
    for (const auto& c : epo.cells) uniq.insert(c.resolver);
    CHECK(uniq.size() == 176);

    auto order_sorted = plan.write_order;
    std::sort(order_sorted.begin(), order_sorted.end());
    for (int i = 0; i < 176; ++i) REQUIRE(order_sorted[size_t(i)] == i);

    size_t weight = weight_of(plan.stored_bits);
    CHECK(res.stats.writes == weight);
    CHECK(res.stats.replans == 0);
    CHECK(res.stats.prefetches == 176);

    // what went over the wire: per cell domain, a recursive query appears
    // exactly for the one-bits
    std::map<std::string, size_t> recursive_by_name;
    size_t prefetch_queries = 0;
    for (const auto& e : fab.transcript()) {
        if (e.mode != QueryMode::Recursive) continue;
        if (e.qname.starts_with("www.")) {
            ++prefetch_queries;
            continue;
        }
        recursive_by_name[e.qname]++;
    }
    CHECK(prefetch_queries == 176);
    size_t observed_writes = 0;
    for (size_t i = 0; i < 176; ++i) {
        auto it = recursive_by_name.find(epo.cells[i].domain);
        if (plan.stored_bits[i]) {
            REQUIRE(it != recursive_by_name.end());
            CHECK(it->second == 1);
            ++observed_writes;
        } else {
            CHECK(it == recursive_by_name.end());
        }
    }
    CHECK(observed_writes == weight);

    SECTION("the caches now hold exactly the one-bits") {
        for (size_t i = 0; i < 176; ++i)
            CHECK(fab.at(epo.cells[i].resolver).has_cached(epo.cells[i].domain, fab.now()) ==
                  (plan.stored_bits[i] == 1));
    }

    SECTION("prefetch can be disabled") {
        SimFabric fab2(base_config(400));
        KeystoreConfig quiet = cfg;
        quiet.prefetch = false;
        SeededRandom rng2(42);
        auto res2 = encode_message(fab2, fab2.endpoints(), pool, msg("x"), 86400, quiet, rng2);
        CHECK(res2.stats.prefetches == 0);
        for (const auto& e : fab2.transcript()) CHECK_FALSE(e.qname.starts_with("www."));
    }
}

TEST_CASE("same seed, same object bytes") {
    auto run = [](bytes text) {
        SimFabric fab(base_config(300, 11));
        auto pool = synth_pool(fab.universe(), 1200);
        SeededRandom rng(9);
        auto res = encode_message(fab, fab.endpoints(), pool, text, 86400, {}, rng);
        return epo_serialize(res.epo);
    };
    auto a = run(msg("determinism"));
    auto b = run(msg("determinism"));
    CHECK(a == b);
    auto c = run(msg("determinisn"));
    CHECK(a != c); // fresh key and ciphertext either way, but same cells
}

TEST_CASE("retrieval reads data cells and engages parity only on damage") {
    SimFabric fab(base_config(400));
    auto pool = synth_pool(fab.universe(), 1500);
    KeystoreConfig cfg;
    SeededRandom rng(1234);
    const bytes text = msg("meet me at the usual place");

    auto res = encode_message(fab, fab.endpoints(), pool, text, 86400, cfg, rng);
    fab.clear_transcript();

    SECTION("clean path never touches the parity cells") {
        auto dec = decode_message(fab, res.epo, cfg);
        REQUIRE(dec.status == DecodeStatus::Ok);
        CHECK(dec.plaintext == text);
        CHECK(dec.stats.reads == 128);
        CHECK_FALSE(dec.stats.parity_fetched);
        CHECK(dec.stats.erasures == 0);
        REQUIRE(dec.readings.size() == 128);
        for (int i = 0; i < 128; ++i) {
            auto want = res.plan.stored_bits[size_t(i)] ? BitValue::One : BitValue::Zero;
            CHECK(dec.readings[size_t(i)].value == want);
        }
        CHECK(fab.transcript().size() == 128);
        for (const auto& e : fab.transcript()) CHECK(e.mode == QueryMode::NonRecursive);
    }

    SECTION("a restarted resolver flips a bit; the code absorbs it") {
        int victim = -1;
        for (int i = 0; i < 128; ++i)
            if (res.plan.stored_bits[size_t(i)]) { victim = i; break; }
        REQUIRE(victim >= 0);
        fab.schedule_restart(res.epo.cells[size_t(victim)].resolver, fab.now() + 100);
        fab.advance(200);

        auto dec = decode_message(fab, res.epo, cfg);
        REQUIRE(dec.status == DecodeStatus::Ok);
        CHECK(dec.plaintext == text);
        CHECK(dec.stats.reads == 176);
        CHECK(dec.stats.parity_fetched);
        CHECK(dec.stats.corrected);
        CHECK(dec.stats.erasures == 0); // a flip, not an erasure
        CHECK(dec.readings[size_t(victim)].value == BitValue::Zero);
    }

    SECTION("a refusing resolver yields an erasure the parity repairs") {
        fab.at(res.epo.cells[10].resolver).set_profile(BehaviorProfile::preset("no_rd0"));
        auto dec = decode_message(fab, res.epo, cfg);
        REQUIRE(dec.status == DecodeStatus::Ok);
        CHECK(dec.plaintext == text);
        CHECK(dec.stats.reads == 176);
        CHECK(dec.stats.erasures == 1);
        CHECK(dec.readings[10].value == BitValue::Erasure);
    }

    SECTION("a silent resolver is an erasure too, even for a zero bit") {
        int zero_cell = -1;
        for (int i = 0; i < 128; ++i)
            if (!res.plan.stored_bits[size_t(i)]) { zero_cell = i; break; }
        REQUIRE(zero_cell >= 0);
        fab.at(res.epo.cells[size_t(zero_cell)].resolver)
            .set_profile(BehaviorProfile::preset("unreachable"));
        auto dec = decode_message(fab, res.epo, cfg);
        REQUIRE(dec.status == DecodeStatus::Ok);
        CHECK(dec.plaintext == text);
        CHECK(dec.readings[size_t(zero_cell)].value == BitValue::Erasure);
    }

    SECTION("too much loss fails closed") {
        // nine erased symbols exceed what eight parity symbols can carry
        for (int s = 0; s < 9; ++s)
            fab.at(res.epo.cells[size_t(6 * s)].resolver)
                .set_profile(BehaviorProfile::preset("no_rd0"));
        auto dec = decode_message(fab, res.epo, cfg);
        CHECK(dec.status == DecodeStatus::Failed);
        CHECK(dec.plaintext.empty());
    }
}

TEST_CASE("expiry guard refuses late reads unless forced") {
    SimFabric fab(base_config(300));
    auto pool = synth_pool(fab.universe(), 1200);
    KeystoreConfig cfg;
    SeededRandom rng(77);
    const bytes text = msg("short lived");

    auto res = encode_message(fab, fab.endpoints(), pool, text, 86400, cfg, rng);
    uint64_t expiry = res.epo.expiry;

    fab.wait_until(expiry - uint64_t(cfg.clock_skew) - 1);
    CHECK(decode_message(fab, res.epo, cfg).status == DecodeStatus::Ok);

    fab.wait_until(expiry - uint64_t(cfg.clock_skew));
    fab.clear_transcript();
    auto dec = decode_message(fab, res.epo, cfg);
    CHECK(dec.status == DecodeStatus::Expired);
    CHECK(dec.stats.reads == 0);
    CHECK(fab.transcript().empty()); // not one packet

    SECTION("force probes anyway and finds nothing usable") {
        fab.wait_until(expiry + 10);
        KeystoreConfig forced = cfg;
        forced.force = true;
        auto late = decode_message(fab, res.epo, forced);
        CHECK(late.status == DecodeStatus::Failed);
        CHECK(late.stats.reads > 0);
    }

    SECTION("after expiry every cell reads empty") {
        fab.wait_until(expiry + 1);
        for (const auto& c : res.epo.cells) {
            auto out = fab.query(c.resolver, {c.domain, rrtype::A, QueryMode::NonRecursive});
            CHECK(out.kind == OutcomeKind::Miss);
        }
    }
}

TEST_CASE("failed writes replan onto spare resolvers") {
    SimConfig sc;
    sc.seed = 13;
    sc.start_time = 1'699'999'200;
    sc.population = {{BehaviorProfile::preset("compliant"), 200},
                     {BehaviorProfile::preset("no_recursion"), 80}};
    SimFabric fab(sc);
    auto pool = synth_pool(fab.universe(), 1500);
    KeystoreConfig cfg;
    SeededRandom rng(3);
    const bytes text = msg("resilient");

    auto res = encode_message(fab, fab.endpoints(), pool, text, 86400, cfg, rng);
    CHECK(res.stats.replans > 0);
    CHECK(res.stats.writes > weight_of(res.plan.stored_bits)); // failed attempts counted too

    auto dec = decode_message(fab, res.epo, cfg);
    REQUIRE(dec.status == DecodeStatus::Ok);
    CHECK(dec.plaintext == text);

    SECTION("an all-refusing population cannot host a message") {
        SimConfig bad = sc;
        bad.population = {{BehaviorProfile::preset("no_recursion"), 200}};
        SimFabric fab2(bad);
        SeededRandom rng2(3);
        CHECK_THROWS_AS(encode_message(fab2, fab2.endpoints(), pool, text, 86400, cfg, rng2),
                        EncodeFailure);
    }
}

TEST_CASE("overwrite attack splits cache ages and the skew read survives it") {
    SimFabric fab(base_config(400, 21));
    auto pool = synth_pool(fab.universe(), 1500);
    KeystoreConfig cfg;
    SeededRandom rng(2024);
    const bytes text = msg("the package is in locker 9");

    auto res = encode_message(fab, fab.endpoints(), pool, text, 86400, cfg, rng);
    const auto& epo = res.epo;

    SECTION("before any attack the skew read refuses to guess") {
        fab.advance(600);
        CHECK_THROWS_AS(ttl_skew_read(fab, epo, cfg), SkewAmbiguous);
    }

    SECTION("a two hour old overwrite is recovered exactly") {
        size_t hits = flip_attack(fab, epo, fab.now() + 7200);
        CHECK(hits == 176); // ones from cache, zeros freshly fetched: all answer
        fab.advance(300);

        // the naive read is now poisoned: every cell answers
        auto naive = decode_message(fab, epo, cfg);
        CHECK(naive.status == DecodeStatus::Failed);

        auto readings = ttl_skew_read(fab, epo, cfg);
        REQUIRE(readings.size() == 176);
        for (size_t i = 0; i < readings.size(); ++i) {
            auto want = res.plan.stored_bits[i] ? BitValue::One : BitValue::Zero;
            CHECK(readings[i].value == want);
        }

        auto dec = decode_message_after_flip(fab, epo, cfg);
        REQUIRE(dec.status == DecodeStatus::Ok);
        CHECK(dec.plaintext == text);
        CHECK(dec.stats.reads == 176);
    }

    SECTION("an attack too close to the write is ambiguous") {
        flip_attack(fab, epo, fab.now() + 10);
        CHECK_THROWS_WITH(ttl_skew_read(fab, epo, cfg),
                          Catch::Matchers::ContainsSubstring("separated by only"));
    }

    SECTION("attack timing is not the reader's choice") {
        CHECK_THROWS_AS(flip_attack(fab, epo, fab.now() - 1), InputError);
    }
}

TEST_CASE("crawl coverage tracks the compromised fraction") {
    SimFabric fab(base_config(1000, 5));
    auto pool = synth_pool(fab.universe(), 2500);
    SeededRandom rng(6);
    auto res = encode_message(fab, fab.endpoints(), pool, msg("spread thin"), 86400, {}, rng);

    double seen = crawl_adversary(fab, 0.10, res.epo);
    CHECK(fab.compromised_count() == 100);
    CHECK(seen > 0.03);
    CHECK(seen < 0.20);

    CHECK(crawl_adversary(fab, 0.0, res.epo) == 0.0);
    CHECK(crawl_adversary(fab, 1.0, res.epo) == 1.0);
}

TEST_CASE("message size edges", "[keystore]") {
    SimFabric fab(base_config(300, 8));
    auto pool = synth_pool(fab.universe(), 1200);
    SeededRandom rng(15);

    bytes big(10 * 1024);
    for (size_t i = 0; i < big.size(); ++i) big[i] = uint8_t(i * 131 + 7);

    auto res_big = encode_message(fab, fab.endpoints(), pool, big, 86400, {}, rng);
    auto dec_big = decode_message(fab, res_big.epo, {});
    REQUIRE(dec_big.status == DecodeStatus::Ok);
    CHECK(dec_big.plaintext == big);

    auto res_empty = encode_message(fab, fab.endpoints(), pool, bytes{}, 86400, {}, rng);
    auto dec_empty = decode_message(fab, res_empty.epo, {});
    REQUIRE(dec_empty.status == DecodeStatus::Ok);
    CHECK(dec_empty.plaintext.empty());
}
