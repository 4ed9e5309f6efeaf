#pragma once

#include <map>
#include <utility>
#include <vector>

#include "dish/classify.hpp"
#include "dish/core.hpp"
#include "dish/geometry.hpp"
#include "dish/topology.hpp"

namespace dish {

// A sampled point together with the unsafe pairs an altruist there covers.
// Coverage rule: the point must be within R of both endpoints of the pair.
struct WitnessPoint {
  Vec2 pos;
  std::vector<Pair> covered_ups;  // sorted
};

// A distinct maximal covered-UP set, owned by one face of the disk
// arrangement; the witness is a point strictly inside that face.
struct Orphanage {
  std::vector<Pair> ups;  // non-empty, sorted
  WitnessPoint witness;
};

struct OrphanageSet {
  std::vector<Orphanage> orphanages;  // sorted by UP set
  int disk_count = 0;

  int size() const { return static_cast<int>(orphanages.size()); }
};

// One disk per peer that appears in some unsafe pair, in peer-index order.
inline std::vector<CoverageDisk> covering_disks(const Topology& t,
                                                const UnsafePairSet& u) {
  std::vector<bool> incident(t.size(), false);
  for (const auto& c : u.pairs) {
    incident[c.pair.a] = true;
    incident[c.pair.b] = true;
  }
  std::vector<CoverageDisk> disks;
  for (int v = 0; v < t.size(); ++v)
    if (incident[v]) disks.push_back({v, t.pos_of(v), t.radio_range});
  return disks;
}

inline std::vector<Pair> covered_ups_at(const Topology& t,
                                        const UnsafePairSet& u,
                                        const Vec2& p) {
  std::vector<Pair> covered;
  for (const auto& c : u.pairs) {
    if (distance(p, t.pos_of(c.pair.a)) <= t.radio_range &&
        distance(p, t.pos_of(c.pair.b)) <= t.radio_range)
      covered.push_back(c.pair);
  }
  return covered;
}

// Candidate witnesses annotated with their covered sets; points that cover
// nothing are of no use to the planner and are dropped here.
inline std::vector<WitnessPoint> arrangement_candidates(
    const Topology& t, const UnsafePairSet& u,
    const std::vector<CoverageDisk>& disks) {
  std::vector<WitnessPoint> out;
  for (const Vec2& p : candidate_points(disks)) {
    std::vector<Pair> covered = covered_ups_at(t, u, p);
    if (!covered.empty()) out.push_back({p, std::move(covered)});
  }
  return out;
}

// Distinct covered-UP sets over all candidates. Because every disk has the
// same radius, each face with a non-empty covered set either touches a
// boundary crossing (hit by a nudged witness) or belongs to a disk whose
// center lies in it, so the candidate sweep sees every orphanage.
inline OrphanageSet enumerate_orphanages(const Topology& t,
                                         const UnsafePairSet& u) {
  OrphanageSet hs;
  if (u.pairs.empty()) return hs;
  const auto disks = covering_disks(t, u);
  hs.disk_count = static_cast<int>(disks.size());
  std::map<std::vector<Pair>, WitnessPoint> first_witness;
  for (auto& w : arrangement_candidates(t, u, disks)) {
    auto key = w.covered_ups;  // keep the earliest witness per distinct set
    first_witness.try_emplace(std::move(key), std::move(w));
  }
  for (auto& [ups, witness] : first_witness)
    hs.orphanages.push_back({ups, std::move(witness)});
  return hs;
}

}  // namespace dish
