#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "common.hpp"

namespace ephpub {

namespace detail {

// log2 of an arbitrarily large positive integer: peel the magnitude off as
// a power of two, convert the top 63 bits exactly, take the float log of those.
inline double log2_big(const boost::multiprecision::cpp_int& v) {
    if (v <= 0) throw DomainError("log2 of non-positive value");
    size_t top = msb(v); // highest set bit index
    if (top <= 62) return std::log2(v.convert_to<double>());
    boost::multiprecision::cpp_int head = v >> (top - 62);
    return double(top - 62) + std::log2(head.convert_to<double>());
}

} // namespace detail

// How many bits of key entropy the public Hamming weight gives away:
// n - log2( sum_m C(n,m)^2 / 2^n ), evaluated with exact binomials.
inline double hamming_entropy_loss(int n_bits) {
    if (n_bits < 1 || n_bits > 4096) throw InputError("key size out of range");
    using boost::multiprecision::cpp_int;
    cpp_int sum = 0;
    cpp_int binom = 1; // C(n, 0)
    for (int m = 0; m <= n_bits; ++m) {
        sum += binom * binom;
        binom = binom * (n_bits - m) / (m + 1);
    }
    return 2.0 * double(n_bits) - detail::log2_big(sum);
}

// Chance that at least two of n published objects share a (resolver, domain)
// cell: 1 - e^(-n(n-1)/2d) with d the number of distinct cells available.
inline double collision_probability(uint64_t n_docs, uint64_t resolvers,
                                    uint64_t domains_in_bucket) {
    if (n_docs < 1 || resolvers < 1 || domains_in_bucket < 1)
        throw InputError("collision inputs must be positive");
    double d = double(resolvers) * double(domains_in_bucket);
    double x = double(n_docs) * double(n_docs - 1) / (2.0 * d);
    return -std::expm1(-x);
}

// DNS bytes moved to store and to retrieve one key, at a given average
// message size.  Reads are worst-cased at every cell (parity fetch included).
struct TrafficEstimate {
    size_t store_transactions = 0;    // one-bit writes, plus prefetches when on
    size_t retrieve_transactions = 0; // every cell probed once
    size_t store_bytes = 0;
    size_t retrieve_bytes = 0;
    size_t combined_bytes = 0;
    size_t per_phase_peak_bytes = 0; // the "at most" figure: worst single phase
};

inline TrafficEstimate traffic_estimate(size_t codeword_weight, size_t avg_msg_bytes,
                                        size_t cells = 176, bool prefetch = false) {
    if (codeword_weight > cells) throw InputError("weight exceeds cell count");
    TrafficEstimate e;
    e.store_transactions = codeword_weight + (prefetch ? cells : 0);
    e.retrieve_transactions = cells;
    e.store_bytes = e.store_transactions * avg_msg_bytes;
    e.retrieve_bytes = e.retrieve_transactions * avg_msg_bytes;
    e.combined_bytes = e.store_bytes + e.retrieve_bytes;
    e.per_phase_peak_bytes = std::max(cells * avg_msg_bytes, e.store_bytes);
    return e;
}

// Uniform wrapper so the CLI can print any calculator result the same way.
struct AnalysisReport {
    std::string quantity;
    std::vector<std::pair<std::string, double>> inputs;
    double value = 0;

    std::string render() const {
        std::string s = quantity + "(";
        for (size_t i = 0; i < inputs.size(); ++i) {
            if (i) s += ", ";
            s += inputs[i].first + "=";
            double v = inputs[i].second;
            if (v == std::floor(v) && std::abs(v) < 1e15) {
                s += std::to_string(int64_t(v));
            } else {
                char buf[32];
                snprintf(buf, sizeof buf, "%g", v);
                s += buf;
            }
        }
        char buf[40];
        snprintf(buf, sizeof buf, "%.6g", value);
        return s + ") = " + buf;
    }
};

} // namespace ephpub
