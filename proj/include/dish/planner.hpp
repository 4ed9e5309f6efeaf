#pragma once

#include <string>

#include "dish/classify.hpp"
#include "dish/core.hpp"
#include "dish/orphanage.hpp"
#include "dish/set_cover.hpp"
#include "dish/topology.hpp"
#include "json.hpp"

namespace dish {

enum class Solver { Greedy, Exact };

inline std::string to_string(Solver s) {
  return s == Solver::Exact ? "exact" : "greedy";
}

inline Solver solver_from_string(const std::string& s) {
  if (s == "exact") return Solver::Exact;
  if (s == "greedy") return Solver::Greedy;
  throw ParseError("unknown solver: " + s + " (expected greedy|exact)");
}

// End-to-end pipeline: unsafe pairs -> covering disks -> orphanages -> cover.
// An oversized orphanage set downgrades the exact request to greedy.
inline Placement plan(const Topology& t, PsmMode mode, Solver solver) {
  const AdjacencyGraph g = build_graph(t);
  const UnsafePairSet u = enumerate_unsafe_pairs(g, mode);
  if (u.pairs.empty()) {
    Placement empty;
    empty.solver = to_string(solver);
    return empty;
  }
  const OrphanageSet hs = enumerate_orphanages(t, u);
  if (solver == Solver::Exact) {
    try {
      return exact_cover(u, hs);
    } catch (const LimitExceeded&) {
      return greedy_cover(u, hs);
    }
  }
  return greedy_cover(u, hs);
}

inline nlohmann::json pair_to_json(const Topology& t, const Pair& p) {
  return nlohmann::json::array({t.id_of(p.a), t.id_of(p.b)});
}

inline nlohmann::json placement_to_json(const Topology& t,
                                        const Placement& p) {
  nlohmann::json altruists = nlohmann::json::array();
  for (const auto& a : p.altruists) {
    nlohmann::json covers = nlohmann::json::array();
    for (const auto& up : a.covers) covers.push_back(pair_to_json(t, up));
    altruists.push_back({{"x", a.pos.x}, {"y", a.pos.y}, {"covers", covers}});
  }
  nlohmann::json ups = nlohmann::json::array();
  for (const auto& up : p.ups) ups.push_back(pair_to_json(t, up));
  return {{"altruists", altruists},
          {"k", p.k},
          {"solver", p.solver},
          {"U", ups},
          {"orphanage_count", p.orphanage_count}};
}

// Independent check of a placement against the topology it was planned for:
// every unsafe pair must have a named altruist within range of both ends.
inline bool placement_certificate_valid(const Topology& t,
                                        const UnsafePairSet& u,
                                        const Placement& p) {
  if (p.k != static_cast<int>(p.altruists.size())) return false;
  if (static_cast<int>(p.ups.size()) != u.size()) return false;
  for (int i = 0; i < u.size(); ++i)
    if (p.ups[i] != u.pairs[i].pair) return false;
  for (const auto& c : u.pairs) {
    auto it = p.certificate.find(c.pair);
    if (it == p.certificate.end()) return false;
    if (it->second < 0 || it->second >= p.k) return false;
    const Vec2 pos = p.altruists[it->second].pos;
    if (distance(pos, t.pos_of(c.pair.a)) > t.radio_range) return false;
    if (distance(pos, t.pos_of(c.pair.b)) > t.radio_range) return false;
  }
  return true;
}

}  // namespace dish
