// ephpub: publish files that stop being readable once resolver caches forget
// the key.  Subcommands bind the library against either the deterministic
// simulator (default) or live UDP transport.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ephpub/analysis.hpp"
#include "ephpub/dataset.hpp"
#include "ephpub/epo.hpp"
#include "ephpub/keystore.hpp"
#include "ephpub/scenario.hpp"
#include "ephpub/udp_transport.hpp"

using namespace ephpub;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kEncodeFailed = 2, kExpired = 3, kDecodeFailed = 4 };

// "3600", "90m", "24h", "7d", "1.5h" and the like
uint32_t parse_duration(const std::string& text) {
    if (text.empty()) throw InputError("empty duration");
    double mult = 1.0;
    std::string num = text;
    switch (text.back()) {
    case 's': mult = 1; num.pop_back(); break;
    case 'm': mult = 60; num.pop_back(); break;
    case 'h': mult = 3600; num.pop_back(); break;
    case 'd': mult = 86400; num.pop_back(); break;
    case 'w': mult = 604800; num.pop_back(); break;
    default: break;
    }
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(num, &used);
    } catch (const std::exception&) {
        throw InputError("bad duration: " + text);
    }
    if (used != num.size() || v <= 0) throw InputError("bad duration: " + text);
    double secs = v * mult;
    if (secs > double(UINT32_MAX)) throw InputError("duration too large: " + text);
    return uint32_t(secs + 0.5);
}

std::string config_default(const char* name) {
    const char* dir = std::getenv("EPHPUB_CONFIG_DIR");
    if (!dir || !*dir) return {};
    return std::string(dir) + "/" + name;
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return !path.empty() && std::filesystem::exists(path, ec);
}

bytes read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    return bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_binary(const std::string& path, byte_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    if (!out) throw InputError("short write to " + path);
}

struct BackendOpts {
    std::string backend = "sim";
    std::string scenario;
    std::string state;
    std::string dataset;
    std::string pool;
    std::string proxy;
    uint64_t seed = 0;
    unsigned threads = 16;
    double timeout_ms = 2000;
    int retries = 2;
    uint64_t advance = 0;
    bool ack_network = false;
    bool force = false;
    bool no_prefetch = false;
    CLI::Option* seed_opt = nullptr;

    bool seed_set() const { return seed_opt && seed_opt->count() > 0; }
};

void add_backend_flags(CLI::App* cmd, BackendOpts& o) {
    cmd->add_option("--backend", o.backend, "sim or real")
        ->check(CLI::IsMember({"sim", "real"}))
        ->capture_default_str();
    cmd->add_option("--scenario", o.scenario, "scenario file (sim backend)");
    cmd->add_option("--state", o.state, "snapshot file; resumed if present, saved on exit");
    o.seed_opt = cmd->add_option("--seed", o.seed, "override the scenario seed");
    cmd->add_option("--dataset", o.dataset, "probed resolver dataset file");
    cmd->add_option("--pool", o.pool, "harvested domain pool file");
    cmd->add_option("--threads", o.threads, "parallel queries (real backend)")->capture_default_str();
    cmd->add_option("--timeout", o.timeout_ms, "per-query timeout, ms (real backend)")
        ->capture_default_str();
    cmd->add_option("--retries", o.retries, "resends per query (real backend)")->capture_default_str();
    cmd->add_option("--proxy", o.proxy, "route queries through a proxy (unsupported)");
    cmd->add_option("--advance", o.advance, "advance the virtual clock this many seconds first");
    cmd->add_flag("--i-understand-network-effects", o.ack_network,
                  "required for the real backend: publishing loads other people's resolvers");
}

struct SimRun {
    sim::Scenario scenario;
    std::optional<sim::SimFabric> fabric;
};

SimRun open_sim(const BackendOpts& o) {
    SimRun run;
    if (file_exists(o.state)) {
        if (o.seed_set()) throw InputError("--seed cannot change an already-saved state");
        auto restored = sim::load_sim_state(o.state);
        run.scenario = std::move(restored.scenario);
        run.fabric.emplace(std::move(restored.fabric));
        return run;
    }
    std::string path = o.scenario.empty() ? config_default("scenario.json") : o.scenario;
    if (!file_exists(path))
        throw InputError("sim backend needs --scenario (or --state with an existing snapshot)");
    run.scenario = sim::load_scenario(path);
    if (o.seed_set()) run.scenario.config.seed = o.seed;
    run.fabric.emplace(sim::make_fabric(run.scenario));
    return run;
}

void maybe_save_state(SimRun& run, const BackendOpts& o) {
    if (o.state.empty()) return;
    sim::save_sim_state_file(*run.fabric, run.scenario, o.state);
    std::printf("state saved to %s\n", o.state.c_str());
}

void require_real_ack(const BackendOpts& o) {
    if (!o.ack_network)
        throw InputError("the real backend sends traffic to resolvers you do not own; "
                         "pass --i-understand-network-effects to proceed");
}

UdpTransport open_real(const BackendOpts& o) {
    require_real_ack(o);
    UdpTransport::Options opt;
    opt.timeout_ms = o.timeout_ms;
    opt.retries = o.retries;
    opt.parallelism = o.threads;
    opt.proxy = o.proxy;
    return UdpTransport(opt);
}

std::vector<DomainCandidate> load_pool_file(const std::string& flag) {
    std::string path = flag.empty() ? config_default("pool.txt") : flag;
    if (!file_exists(path))
        throw InputError("real backend needs --pool (harvest one first)");
    return parse_pool(slurp_file(path));
}

std::vector<ResolverEndpoint> load_dataset_file(const std::string& flag) {
    std::string path = flag.empty() ? config_default("dataset.txt") : flag;
    if (!file_exists(path))
        throw InputError("real backend needs --dataset (probe resolvers first)");
    return reliable_endpoints(parse_dataset(slurp_file(path)));
}

// nearest authoritative TTL bucket within tolerance, or 0 when none fits
uint32_t pick_bucket(uint32_t ttl, double tolerance) {
    uint32_t best = 0;
    double best_gap = 0;
    for (const auto& bucket : sim::default_ttl_weights()) {
        uint32_t b = bucket.first;
        double gap = std::abs(double(b) - double(ttl));
        if (gap > tolerance * double(ttl)) continue;
        if (!best || gap < best_gap) {
            best = b;
            best_gap = gap;
        }
    }
    return best;
}

std::vector<ResolverEndpoint> sim_dataset(sim::SimFabric& fab, const BackendOpts& o) {
    std::string path = o.dataset.empty() ? config_default("dataset.txt") : o.dataset;
    if (file_exists(path)) return reliable_endpoints(parse_dataset(slurp_file(path)));
    SyntheticProbeSource src(fab.rng().next_u64() >> 20);
    auto assessed = build_resolver_dataset(fab, fab.endpoints(), src);
    std::vector<ResolverEndpoint> out;
    for (const auto& a : assessed)
        if (a.reliable()) out.push_back(a.endpoint);
    fab.clear_transcript();
    return out;
}

std::vector<DomainCandidate> sim_pool(sim::SimFabric& fab, const sim::Scenario& sc,
                                      const BackendOpts& o, uint32_t ttl, double tolerance) {
    std::string path = o.pool.empty() ? config_default("pool.txt") : o.pool;
    if (file_exists(path)) return parse_pool(slurp_file(path));
    return sim::synth_candidates(fab.universe(), sc.pool_size, pick_bucket(ttl, tolerance));
}

// --- encode ------------------------------------------------------------

struct EncodeArgs {
    std::string in, out, ttl_text;
    BackendOpts be;
};

void print_encode_stats(const EncodeResult& res, size_t payload, size_t epo_bytes,
                        const std::string& out) {
    std::printf("payload_bytes %zu\n", payload);
    std::printf("epo_bytes %zu\n", epo_bytes);
    std::printf("overhead_bytes %zu\n", epo_bytes - payload);
    std::printf("cells %zu\n", res.epo.cells.size());
    std::printf("prechecks %zu\n", res.stats.prechecks);
    std::printf("prefetches %zu\n", res.stats.prefetches);
    std::printf("writes %zu\n", res.stats.writes);
    std::printf("replans %zu\n", res.stats.replans);
    std::printf("expiry %llu\n", static_cast<unsigned long long>(res.epo.expiry));
    std::printf("epo written to %s\n", out.c_str());
}

int cmd_encode(const EncodeArgs& a) {
    uint32_t ttl = parse_duration(a.ttl_text);
    auto payload = read_binary(a.in);
    KeystoreConfig kc;
    kc.prefetch = !a.be.no_prefetch;

    EncodeResult res;
    if (a.be.backend == "real") {
        auto t = open_real(a.be);
        auto dataset = load_dataset_file(a.be.dataset);
        auto pool = load_pool_file(a.be.pool);
        SystemRandom rng;
        res = encode_message(t, dataset, pool, payload, ttl, kc, rng);
    } else {
        auto run = open_sim(a.be);
        auto& fab = *run.fabric;
        if (a.be.advance) fab.advance(a.be.advance);
        auto dataset = sim_dataset(fab, a.be);
        auto pool = sim_pool(fab, run.scenario, a.be, ttl, kc.ttl_tolerance);
        res = encode_message(fab, dataset, pool, payload, ttl, kc, fab.rng());
        maybe_save_state(run, a.be);
    }

    auto blob = epo_serialize(res.epo);
    write_binary(a.out, blob);
    print_encode_stats(res, payload.size(), blob.size(), a.out);
    return kOk;
}

// --- decode ------------------------------------------------------------

struct DecodeArgs {
    std::string in, out;
    BackendOpts be;
};

int cmd_decode(const DecodeArgs& a) {
    auto blob = read_binary(a.in);
    auto epo = epo_parse(blob);
    KeystoreConfig kc;
    kc.force = a.be.force;

    DecodeResult res;
    if (a.be.backend == "real") {
        auto t = open_real(a.be);
        res = decode_message(t, epo, kc);
    } else {
        auto run = open_sim(a.be);
        auto& fab = *run.fabric;
        if (a.be.advance) fab.advance(a.be.advance);
        res = decode_message(fab, epo, kc);
        maybe_save_state(run, a.be);
    }

    const char* status = res.status == DecodeStatus::Ok        ? "ok"
                         : res.status == DecodeStatus::Expired ? "expired"
                                                               : "failed";
    std::printf("status %s\n", status);
    std::printf("reads %zu\n", res.stats.reads);
    std::printf("erasures %zu\n", res.stats.erasures);
    std::printf("parity_fetched %d\n", res.stats.parity_fetched ? 1 : 0);
    std::printf("corrected %d\n", res.stats.corrected ? 1 : 0);

    if (res.status == DecodeStatus::Expired) return kExpired;
    if (res.status == DecodeStatus::Failed) return kDecodeFailed;
    write_binary(a.out, res.plaintext);
    std::printf("plaintext_bytes %zu\n", res.plaintext.size());
    std::printf("plaintext written to %s\n", a.out.c_str());
    return kOk;
}

// --- probe / harvest ----------------------------------------------------

struct ProbeArgs {
    std::string out, resolvers;
    uint32_t probe_ttl = 3600;
    BackendOpts be;
};

void print_dataset_summary(const std::vector<DatasetRecord>& records, bool as_comment, FILE* to) {
    const char* p = as_comment ? "# " : "";
    size_t by_stage[5] = {0, 0, 0, 0, 0};
    for (const auto& r : records) by_stage[r.rejected_stage]++;
    std::fprintf(to, "%sprobed %zu\n", p, records.size());
    std::fprintf(to, "%sreliable %zu\n", p, by_stage[0]);
    for (int s = 1; s <= 4; ++s) std::fprintf(to, "%srejected_stage%d %zu\n", p, s, by_stage[s]);
}

int cmd_probe(const ProbeArgs& a) {
    ProbeSchedule sched{a.probe_ttl};
    std::vector<ResolverAssessment> assessed;
    if (a.be.backend == "real") {
        auto t = open_real(a.be);
        if (!file_exists(a.resolvers))
            throw InputError("real backend needs --resolvers (one address per line)");
        std::vector<ResolverEndpoint> eps;
        std::istringstream in(slurp_file(a.resolvers));
        for (std::string line; std::getline(in, line);) {
            if (line.empty() || line[0] == '#') continue;
            eps.push_back(ResolverEndpoint::parse(line));
        }
        PoolProbeSource src(load_pool_file(a.be.pool));
        assessed = build_resolver_dataset(t, eps, src, sched);
    } else {
        auto run = open_sim(a.be);
        auto& fab = *run.fabric;
        if (a.be.advance) fab.advance(a.be.advance);
        SyntheticProbeSource src(fab.rng().next_u64() >> 20);
        assessed = build_resolver_dataset(fab, fab.endpoints(), src, sched);
        maybe_save_state(run, a.be);
    }

    std::vector<DatasetRecord> records;
    records.reserve(assessed.size());
    for (const auto& x : assessed) records.push_back(to_record(x));

    if (a.out.empty()) {
        std::fputs(format_dataset(records).c_str(), stdout);
        print_dataset_summary(records, true, stdout);
        return kOk;
    }
    if (file_exists(a.out)) {
        size_t fresh = records.size();
        records = merge_records(parse_dataset(slurp_file(a.out)), records);
        std::printf("merged %zu probes, %zu records total\n", fresh, records.size());
    }
    spit_file(a.out, format_dataset(records));
    print_dataset_summary(records, false, stdout);
    std::printf("dataset written to %s\n", a.out.c_str());
    return kOk;
}

struct HarvestArgs {
    std::string out, buckets_text, recursor;
    size_t count = 4000;
    BackendOpts be;
};

std::vector<uint32_t> parse_buckets(const std::string& text) {
    std::vector<uint32_t> out;
    std::istringstream in(text);
    for (std::string tok; std::getline(in, tok, ',');)
        if (!tok.empty()) out.push_back(parse_duration(tok));
    return out;
}

int cmd_harvest(const HarvestArgs& a) {
    auto buckets = parse_buckets(a.buckets_text);
    HarvestResult res;
    if (a.be.backend == "real") {
        auto t = open_real(a.be);
        if (a.recursor.empty())
            throw InputError("real backend needs --recursor (a resolver you are allowed to load)");
        SystemRandom rng;
        res = harvest_domains(t, ResolverEndpoint::parse(a.recursor), a.count, buckets, rng);
    } else {
        auto run = open_sim(a.be);
        auto& fab = *run.fabric;
        if (a.be.advance) fab.advance(a.be.advance);
        res = harvest_domains(fab, fab.local_recursor(), a.count, buckets, fab.rng());
        fab.clear_transcript();
        maybe_save_state(run, a.be);
    }

    auto summary = [&](bool as_comment, FILE* to) {
        const char* p = as_comment ? "# " : "";
        std::fprintf(to, "%sattempts %zu\n", p, res.attempts);
        std::fprintf(to, "%sresolved %zu\n", p, res.resolved);
        std::fprintf(to, "%spooled %zu\n", p, res.pool.size());
        for (const auto& [b, n] : res.bucket_counts) std::fprintf(to, "%sbucket %u %zu\n", p, b, n);
    };

    if (a.out.empty()) {
        std::fputs(format_pool(res.pool).c_str(), stdout);
        summary(true, stdout);
        return kOk;
    }
    auto pool = res.pool;
    if (file_exists(a.out)) pool = merge_pool(parse_pool(slurp_file(a.out)), pool);
    spit_file(a.out, format_pool(pool));
    summary(false, stdout);
    std::printf("pool written to %s\n", a.out.c_str());
    return kOk;
}

// --- simulate -----------------------------------------------------------

struct SimulateArgs {
    std::string scenario, out;
    size_t keys = 20;
    uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
};

int cmd_simulate(const SimulateArgs& a) {
    auto sc = sim::load_scenario(a.scenario);
    if (a.seed_opt && a.seed_opt->count()) sc.config.seed = a.seed;
    auto fab = sim::make_fabric(sc);
    const uint32_t ttl = sc.default_ttl;

    SyntheticProbeSource src(fab.rng().next_u64() >> 20);
    auto assessed = build_resolver_dataset(fab, fab.endpoints(), src);
    std::vector<ResolverEndpoint> dataset;
    for (const auto& x : assessed)
        if (x.reliable()) dataset.push_back(x.endpoint);
    fab.clear_transcript();

    auto pool = sim::synth_candidates(fab.universe(), sc.pool_size, pick_bucket(ttl, 0.10));

    KeystoreConfig plain, forced;
    forced.force = true;

    // probing consumed virtual time; cells are written from here
    const uint64_t t0 = fab.now();

    std::string payload = "ephemeral payload";
    std::vector<EncodeResult> published;
    published.reserve(a.keys);
    for (size_t i = 0; i < a.keys; ++i) {
        published.push_back(encode_message(fab, dataset, pool,
                                           bytes(payload.begin(), payload.end()), ttl, plain,
                                           fab.rng()));
        fab.clear_transcript();
    }

    // sample grid: through the life of the cells, then past expiry
    struct Sample {
        uint64_t at;
        double rel;
    };
    std::vector<Sample> grid;
    const double fracs[] = {1.0 / 24, 1.0 / 8, 1.0 / 4, 1.0 / 2, 3.0 / 4, 239.0 / 240};
    for (double f : fracs) grid.push_back({t0 + uint64_t(f * ttl + 0.5), f});
    grid.push_back({t0 + ttl + 1, 1.0 + 1.0 / ttl});
    grid.push_back({t0 + ttl + ttl / 4, 1.25});
    grid.push_back({t0 + 2ull * ttl, 2.0});

    std::string table = "# ephpub-simulate v1\n";
    table += "# scenario " + sc.name + " seed " + std::to_string(sc.config.seed) + " ttl " +
             std::to_string(ttl) + " keys " + std::to_string(a.keys) + "\n";
    table += "# rel_time abs_time success raw_bit_agreement\n";

    for (const auto& s : grid) {
        fab.wait_until(s.at);
        size_t ok = 0;
        double agree_sum = 0;
        for (const auto& pub : published) {
            auto dec = decode_message(fab, pub.epo, plain);
            if (dec.status == DecodeStatus::Ok &&
                dec.plaintext == bytes(payload.begin(), payload.end()))
                ok++;

            auto raw = decode_message(fab, pub.epo, forced);
            size_t match = 0;
            for (const auto& r : raw.readings)
                if ((r.value == BitValue::One) ==
                    (pub.plan.stored_bits[size_t(r.position)] != 0))
                    match++;
            if (!raw.readings.empty()) agree_sum += double(match) / double(raw.readings.size());
            fab.clear_transcript();
        }
        char line[128];
        std::snprintf(line, sizeof line, "%.6f %llu %.6f %.6f\n", s.rel,
                      static_cast<unsigned long long>(s.at), double(ok) / double(a.keys),
                      agree_sum / double(a.keys));
        table += line;
    }

    if (a.out.empty())
        std::fputs(table.c_str(), stdout);
    else {
        spit_file(a.out, table);
        std::printf("series written to %s\n", a.out.c_str());
    }
    return kOk;
}

// --- analyze ------------------------------------------------------------

struct AnalyzeArgs {
    int bits = 128;
    uint64_t docs = 10000, resolvers = 25000, domains = 1000000;
    size_t weight = 88, cells = 176, avg_name = 180;
    bool prefetch = false;
};

int cmd_analyze_hamming(const AnalyzeArgs& a) {
    double loss = hamming_entropy_loss(a.bits);
    AnalysisReport lossr{"hamming_entropy_loss", {{"n", double(a.bits)}}, loss};
    AnalysisReport eff{"effective_key_bits", {{"n", double(a.bits)}}, double(a.bits) - loss};
    std::printf("%s\n%s\n", lossr.render().c_str(), eff.render().c_str());
    return kOk;
}

int cmd_analyze_collision(const AnalyzeArgs& a) {
    double p = collision_probability(a.docs, a.resolvers, a.domains);
    AnalysisReport r{"collision_probability",
                     {{"n", double(a.docs)},
                      {"resolvers", double(a.resolvers)},
                      {"domains", double(a.domains)}},
                     p};
    std::printf("%s\n", r.render().c_str());
    return kOk;
}

int cmd_analyze_traffic(const AnalyzeArgs& a) {
    auto est = traffic_estimate(a.weight, a.avg_name, a.cells, a.prefetch);
    std::printf("store_transactions %zu\n", est.store_transactions);
    std::printf("retrieve_transactions %zu\n", est.retrieve_transactions);
    std::printf("store_bytes %zu\n", est.store_bytes);
    std::printf("retrieve_bytes %zu\n", est.retrieve_bytes);
    std::printf("combined_bytes %zu\n", est.combined_bytes);
    std::printf("per_phase_peak_bytes %zu\n", est.per_phase_peak_bytes);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ephemeral publishing over DNS resolver caches"};
    app.require_subcommand(1);
    app.footer("exit codes: 0 ok, 1 usage, 2 encode failure, 3 expired, 4 decode/parse failure\n"
               "EPHPUB_CONFIG_DIR supplies default scenario.json/dataset.txt/pool.txt locations");

    EncodeArgs enc;
    auto* c_enc = app.add_subcommand("encode", "publish a file as an expiring object");
    c_enc->add_option("--in", enc.in, "plaintext input")->required();
    c_enc->add_option("--out", enc.out, "output .epo path")->required();
    c_enc->add_option("--ttl", enc.ttl_text, "validity window, e.g. 24h or 7d")->required();
    c_enc->add_flag("--no-prefetch", enc.be.no_prefetch,
                    "skip the traffic-shaping prefetch pass (leaks write count upstream)");
    add_backend_flags(c_enc, enc.be);

    DecodeArgs dec;
    auto* c_dec = app.add_subcommand("decode", "recover a published file while it is still valid");
    c_dec->add_option("--in", dec.in, ".epo input")->required();
    c_dec->add_option("--out", dec.out, "plaintext output path")->required();
    c_dec->add_flag("--force", dec.be.force, "read cells even past expiry");
    add_backend_flags(c_dec, dec.be);

    std::string inspect_in;
    auto* c_ins = app.add_subcommand("inspect", "print an .epo header and cell map");
    c_ins->add_option("--in", inspect_in, ".epo input")->required();

    ProbeArgs prb;
    auto* c_prb = app.add_subcommand("probe", "classify resolvers into a reusable dataset");
    c_prb->add_option("--out", prb.out, "dataset file (merged if present; stdout if omitted)");
    c_prb->add_option("--resolvers", prb.resolvers, "file of addresses to probe (real backend)");
    c_prb->add_option("--probe-ttl", prb.probe_ttl, "TTL of probe names")->capture_default_str();
    add_backend_flags(c_prb, prb.be);

    HarvestArgs hrv;
    auto* c_hrv = app.add_subcommand("harvest", "collect cache-cell domains by reverse lookup");
    c_hrv->add_option("--out", hrv.out, "pool file (merged if present; stdout if omitted)");
    c_hrv->add_option("--count", hrv.count, "lookup attempts")->capture_default_str();
    c_hrv->add_option("--buckets", hrv.buckets_text, "comma list of TTLs to keep, e.g. 24h,7d");
    c_hrv->add_option("--recursor", hrv.recursor, "recursive resolver to harvest through (real)");
    add_backend_flags(c_hrv, hrv.be);

    SimulateArgs simu;
    auto* c_sim = app.add_subcommand("simulate", "publish under a scenario and sample recovery");
    c_sim->add_option("--scenario", simu.scenario, "scenario file")->required();
    c_sim->add_option("--keys", simu.keys, "messages to publish")->capture_default_str();
    simu.seed_opt = c_sim->add_option("--seed", simu.seed, "override the scenario seed");
    c_sim->add_option("--out", simu.out, "series file (stdout if omitted)");

    AnalyzeArgs ana;
    auto* c_ana = app.add_subcommand("analyze", "closed-form properties of the scheme");
    c_ana->require_subcommand(1);
    auto* c_ham = c_ana->add_subcommand("hamming", "entropy given away by the key's weight");
    c_ham->add_option("--bits", ana.bits, "key size in bits")->capture_default_str();
    auto* c_col = c_ana->add_subcommand("collision", "chance two objects share a cache cell");
    c_col->add_option("--docs", ana.docs, "simultaneously live objects")->capture_default_str();
    c_col->add_option("--resolvers", ana.resolvers, "resolver population")->capture_default_str();
    c_col->add_option("--domains", ana.domains, "domains per TTL bucket")->capture_default_str();
    auto* c_tra = c_ana->add_subcommand("traffic", "query and byte budget per object");
    c_tra->add_option("--weight", ana.weight, "one-bits in the codeword")->capture_default_str();
    c_tra->add_option("--cells", ana.cells, "cells per object")->capture_default_str();
    c_tra->add_option("--avg-name-bytes", ana.avg_name, "mean DNS transaction size")
        ->capture_default_str();
    c_tra->add_flag("--prefetch", ana.prefetch, "count the prefetch pass");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*c_enc) return cmd_encode(enc);
        if (*c_dec) return cmd_decode(dec);
        if (*c_ins) {
            auto epo = epo_parse(read_binary(inspect_in));
            std::fputs(epo_debug_string(epo).c_str(), stdout);
            return kOk;
        }
        if (*c_prb) return cmd_probe(prb);
        if (*c_hrv) return cmd_harvest(hrv);
        if (*c_sim) return cmd_simulate(simu);
        if (*c_ham) return cmd_analyze_hamming(ana);
        if (*c_col) return cmd_analyze_collision(ana);
        if (*c_tra) return cmd_analyze_traffic(ana);
    } catch (const EncodeFailure& e) {
        std::fprintf(stderr, "ephpub: encode failed: %s\n", e.what());
        return kEncodeFailed;
    } catch (const InsufficientDomains& e) {
        std::fprintf(stderr, "ephpub: encode failed: %s\n", e.what());
        return kEncodeFailed;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "ephpub: parse error: %s\n", e.what());
        return kDecodeFailed;
    } catch (const InputError& e) {
        std::fprintf(stderr, "ephpub: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ephpub: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
