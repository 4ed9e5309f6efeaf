#pragma once

#include <string>
#include <vector>

#include "dish/core.hpp"
#include "dish/topology.hpp"
#include "json.hpp"

namespace dish {

enum class PsmMode { NoPsm, Psm };

inline std::string to_string(PsmMode m) {
  return m == PsmMode::Psm ? "psm" : "nopsm";
}

inline PsmMode psm_mode_from_string(const std::string& s) {
  if (s == "psm") return PsmMode::Psm;
  if (s == "nopsm") return PsmMode::NoPsm;
  throw ParseError("unknown mode: " + s + " (expected nopsm|psm)");
}

enum class TriggeringCondition { CondA, CondB, PsmDeaf, None };

inline std::string to_string(TriggeringCondition c) {
  switch (c) {
    case TriggeringCondition::CondA: return "cond_a";
    case TriggeringCondition::CondB: return "cond_b";
    case TriggeringCondition::PsmDeaf: return "psm_deaf";
    default: return "none";
  }
}

struct PairClassification {
  Pair pair;
  bool channel_conflict_up = false;
  bool deaf_terminal_up = false;
  PsmMode mode = PsmMode::NoPsm;
  TriggeringCondition triggering_condition = TriggeringCondition::None;

  bool unsafe() const { return channel_conflict_up || deaf_terminal_up; }
};

struct UnsafePairSet {
  PsmMode mode = PsmMode::NoPsm;
  std::vector<PairClassification> pairs;  // sorted by pair, unsafe only

  int size() const { return static_cast<int>(pairs.size()); }

  bool contains(Pair p) const {
    for (const auto& c : pairs)
      if (c.pair == p) return true;
    return false;
  }
};

// Two adjacent vertices can jointly cause a coordination problem iff
//   (a) d_i >= 2, d_j >= 2, and not d_i == d_j == 2, or
//   (b) d_i == d_j == 2 and the edge is not on a triangle.
// Power saving leaves (a)/(b) in force for channel conflicts and weakens the
// deaf-terminal condition to: d_i >= 1, d_j >= 1, not d_i == d_j == 1.
inline PairClassification classify_pair(const AdjacencyGraph& g, int i, int j,
                                        PsmMode mode) {
  if (!g.has_edge(i, j))
    throw NotAdjacent("classify_pair: vertices are not adjacent");
  const int di = g.degree(i);
  const int dj = g.degree(j);

  const bool cond_a = di >= 2 && dj >= 2 && !(di == 2 && dj == 2);
  const bool cond_b = di == 2 && dj == 2 && !shared_triangle(g, i, j);
  const bool conflict = cond_a || cond_b;

  PairClassification c;
  c.pair = Pair(i, j);
  c.mode = mode;
  c.channel_conflict_up = conflict;
  if (mode == PsmMode::NoPsm) {
    c.deaf_terminal_up = conflict;
  } else {
    c.deaf_terminal_up = di >= 1 && dj >= 1 && !(di == 1 && dj == 1);
  }

  if (cond_a)
    c.triggering_condition = TriggeringCondition::CondA;
  else if (cond_b)
    c.triggering_condition = TriggeringCondition::CondB;
  else if (c.deaf_terminal_up)
    c.triggering_condition = TriggeringCondition::PsmDeaf;
  else
    c.triggering_condition = TriggeringCondition::None;
  return c;
}

// All edges unsafe in either risk kind, ordered by id pair.
inline UnsafePairSet enumerate_unsafe_pairs(const AdjacencyGraph& g,
                                            PsmMode mode) {
  UnsafePairSet u;
  u.mode = mode;
  for (const Pair& e : g.edges) {
    PairClassification c = classify_pair(g, e.a, e.b, mode);
    if (c.unsafe()) u.pairs.push_back(c);
  }
  return u;
}

inline nlohmann::json unsafe_pairs_to_json(const Topology& t,
                                           const UnsafePairSet& u) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& c : u.pairs) {
    pairs.push_back({{"pair", {t.id_of(c.pair.a), t.id_of(c.pair.b)}},
                     {"condition", to_string(c.triggering_condition)},
                     {"risks",
                      {{"channel_conflict", c.channel_conflict_up},
                       {"deaf_terminal", c.deaf_terminal_up}}},
                     {"mode", to_string(u.mode)}});
  }
  return {{"mode", to_string(u.mode)},
          {"unsafe_count", u.size()},
          {"pairs", pairs}};
}

}  // namespace dish
