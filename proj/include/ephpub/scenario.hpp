#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "keystore.hpp"
#include "simnet.hpp"

namespace ephpub::sim {

// A scenario file describes a reproducible population: who is out there,
// how many of each, which of them restart and when.  Everything else
// (candidate pools, probe results, cache contents) is derived.
struct RestartEvent {
    size_t index = 0;  // position in SimFabric::endpoints() order
    uint64_t after = 0; // seconds past start_time
};

struct Scenario {
    std::string name = "unnamed";
    SimConfig config;
    std::vector<RestartEvent> restarts;
    uint32_t default_ttl = 86400;
    size_t pool_size = 4000;
};

namespace detail {

inline std::string u64_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline uint64_t hex_u64(const std::string& s) {
    if (s.empty() || s.size() > 16 || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
        throw ParseError("bad hex word: " + s);
    return std::stoull(s, nullptr, 16);
}

} // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    j["name"] = sc.name;
    j["seed"] = sc.config.seed;
    j["start_time"] = sc.config.start_time;
    j["universe"] = {{"seed", sc.config.universe.seed},
                     {"resolvable_fraction", sc.config.universe.resolvable_fraction}};
    auto pop = nlohmann::json::array();
    for (const auto& g : sc.config.population) {
        nlohmann::json e{{"profile", g.profile.name}, {"count", g.count}};
        auto ref = BehaviorProfile::preset(g.profile.name);
        if (g.profile.ttl_override != ref.ttl_override) e["ttl_override"] = *g.profile.ttl_override;
        if (g.profile.max_cache_residency != ref.max_cache_residency)
            e["max_cache_residency"] = *g.profile.max_cache_residency;
        if (g.profile.flush_interval != ref.flush_interval) e["flush_interval"] = g.profile.flush_interval;
        if (g.profile.answer_loss_prob != ref.answer_loss_prob)
            e["answer_loss_prob"] = g.profile.answer_loss_prob;
        pop.push_back(std::move(e));
    }
    j["population"] = std::move(pop);
    auto rs = nlohmann::json::array();
    for (const auto& r : sc.restarts) rs.push_back({{"index", r.index}, {"after", r.after}});
    j["restarts"] = std::move(rs);
    j["ttl"] = sc.default_ttl;
    j["pool_size"] = sc.pool_size;
    return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    try {
        Scenario sc;
        sc.name = j.value("name", std::string("unnamed"));
        sc.config.seed = j.value("seed", uint64_t(1));
        sc.config.start_time = j.value("start_time", uint64_t(1'700'000'000));
        if (j.contains("universe")) {
            const auto& u = j.at("universe");
            sc.config.universe.seed = u.value("seed", uint64_t(1));
            sc.config.universe.resolvable_fraction = u.value("resolvable_fraction", 1.0);
        }
        if (!j.contains("population") || !j.at("population").is_array() || j.at("population").empty())
            throw ParseError("scenario: population must be a non-empty array");
        for (const auto& e : j.at("population")) {
            PopulationGroup g;
            g.profile = BehaviorProfile::preset(e.at("profile").get<std::string>());
            g.count = e.at("count").get<size_t>();
            if (g.count == 0) throw ParseError("scenario: population group with count 0");
            if (e.contains("ttl_override")) g.profile.ttl_override = e.at("ttl_override").get<uint32_t>();
            if (e.contains("max_cache_residency"))
                g.profile.max_cache_residency = e.at("max_cache_residency").get<uint32_t>();
            if (e.contains("flush_interval")) g.profile.flush_interval = e.at("flush_interval").get<uint32_t>();
            if (e.contains("answer_loss_prob"))
                g.profile.answer_loss_prob = e.at("answer_loss_prob").get<double>();
            sc.config.population.push_back(std::move(g));
        }
        for (const auto& e : j.value("restarts", nlohmann::json::array()))
            sc.restarts.push_back({e.at("index").get<size_t>(), e.at("after").get<uint64_t>()});
        sc.default_ttl = j.value("ttl", uint32_t(86400));
        sc.pool_size = j.value("pool_size", size_t(4000));
        if (sc.default_ttl == 0) throw ParseError("scenario: ttl must be positive");
        return sc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

inline Scenario load_scenario(const std::string& path) {
    auto text = slurp_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return scenario_from_json(j);
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    spit_file(path, scenario_to_json(sc).dump(2) + "\n");
}

inline SimFabric make_fabric(const Scenario& sc) {
    SimFabric fab(sc.config);
    size_t n = fab.endpoints().size();
    for (const auto& r : sc.restarts) {
        if (r.index >= n)
            throw InputError("restart index " + std::to_string(r.index) + " out of range (population " +
                             std::to_string(n) + ")");
        fab.schedule_restart(fab.endpoints()[r.index], sc.config.start_time + r.after);
    }
    return fab;
}

// Harvested-style candidates minted straight from the answer space, for
// runs that skip the PTR-walk.  ttl_bucket 0 accepts every TTL.
inline std::vector<DomainCandidate> synth_candidates(const AuthoritativeUniverse& u, size_t count,
                                                     uint32_t ttl_bucket = 0,
                                                     uint32_t base_ip = 0x0B000001) {
    std::vector<DomainCandidate> out;
    out.reserve(count);
    for (uint64_t ip = base_ip; out.size() < count; ++ip) {
        if (ip > 0xFFFFFFFFull) throw InputError("address space exhausted while minting candidates");
        auto name = u.host_name(uint32_t(ip));
        auto ttl = u.ttl_of_host(name);
        if (ttl_bucket && ttl != ttl_bucket) continue;
        out.push_back({name, ttl, uint32_t(ip)});
    }
    return out;
}

// Point-in-time snapshot of a paused run: wall clock, RNG position and
// every cache entry.  Restoring replays construction from the scenario,
// settles maintenance at the saved clock, then reinstates the entries.
inline nlohmann::json save_sim_state(SimFabric& fab, const Scenario& sc) {
    nlohmann::json j;
    j["scenario"] = scenario_to_json(sc);
    j["clock"] = fab.now();
    auto st = fab.rng().state();
    j["rng"] = {detail::u64_hex(st[0]), detail::u64_hex(st[1]), detail::u64_hex(st[2]),
                detail::u64_hex(st[3])};
    auto entries = nlohmann::json::array();
    auto everyone = fab.endpoints();
    everyone.push_back(fab.local_recursor());
    for (const auto& ep : everyone) {
        for (const auto& [name, e] : fab.at(ep).cache(fab.now())) {
            entries.push_back({{"resolver", ep.to_string()},
                               {"name", name},
                               {"rdata", e.rdata},
                               {"ttl", e.reported_ttl},
                               {"written", e.written_at},
                               {"expiry", e.expiry},
                               {"drop", e.drop_at}});
        }
    }
    j["caches"] = std::move(entries);
    return j;
}

struct RestoredSim {
    Scenario scenario;
    SimFabric fabric;
};

inline RestoredSim restore_sim_state(const nlohmann::json& j) {
    try {
        auto sc = scenario_from_json(j.at("scenario"));
        RestoredSim out{sc, make_fabric(sc)};
        auto& fab = out.fabric;
        fab.wait_until(j.at("clock").get<uint64_t>());

        // settle pending restarts/flushes before reinstating entries, so
        // they are not retroactively dropped by maintenance catch-up
        auto everyone = fab.endpoints();
        everyone.push_back(fab.local_recursor());
        for (const auto& ep : everyone) fab.at(ep).cache_size(fab.now());

        for (const auto& e : j.at("caches")) {
            CacheEntry ce{e.at("rdata").get<std::string>(), e.at("ttl").get<uint32_t>(),
                          e.at("written").get<uint64_t>(), e.at("expiry").get<uint64_t>(),
                          e.at("drop").get<uint64_t>()};
            fab.at(ResolverEndpoint::parse(e.at("resolver").get<std::string>()))
                .restore_entry(e.at("name").get<std::string>(), std::move(ce));
        }
        const auto& words = j.at("rng");
        if (!words.is_array() || words.size() != 4) throw ParseError("state: rng must hold 4 words");
        fab.rng().restore({detail::hex_u64(words[0].get<std::string>()),
                           detail::hex_u64(words[1].get<std::string>()),
                           detail::hex_u64(words[2].get<std::string>()),
                           detail::hex_u64(words[3].get<std::string>())});
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("state: ") + e.what());
    }
}

inline RestoredSim load_sim_state(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(slurp_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return restore_sim_state(j);
}

inline void save_sim_state_file(SimFabric& fab, const Scenario& sc, const std::string& path) {
    spit_file(path, save_sim_state(fab, sc).dump() + "\n");
}

} // namespace ephpub::sim
