#pragma once

#include "epo.hpp"
#include "simnet.hpp"

namespace ephpub::sim {

// Crawl model: an adversary that can inspect some fraction of all resolver
// caches learns exactly the bits whose cells live there.  Marks a fresh
// uniform sample and reports the share of this object's cells it covers.
inline double crawl_adversary(SimFabric& fabric, double fraction, const EpoObject& epo) {
    fabric.mark_compromised(fraction);
    if (epo.cells.empty()) return 0.0;
    size_t covered = 0;
    for (const auto& c : epo.cells)
        if (fabric.is_compromised(c.resolver)) ++covered;
    return double(covered) / double(epo.cells.size());
}

// Overwrite attack: recursively query every cell at the given moment.
// Cells that held a one keep their aging entry (caches answer from store);
// cells that held a zero gain a brand-new entry.  Returns the hit count.
inline size_t flip_attack(SimFabric& fabric, const EpoObject& epo, uint64_t attack_time) {
    if (attack_time < fabric.now())
        throw InputError("attack time is in the past");
    fabric.wait_until(attack_time);
    size_t hits = 0;
    for (const auto& c : epo.cells) {
        auto out = fabric.query(c.resolver, {c.domain, rrtype::A, QueryMode::Recursive});
        if (out.kind == OutcomeKind::Hit) ++hits;
    }
    return hits;
}

} // namespace ephpub::sim
