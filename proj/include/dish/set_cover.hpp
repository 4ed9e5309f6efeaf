#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dish/classify.hpp"
#include "dish/core.hpp"
#include "dish/orphanage.hpp"

namespace dish {

// Branch-and-bound is exponential in the orphanage count; past this size
// callers fall back to the greedy heuristic.
inline constexpr int kExactSolverLimit = 24;

struct PlacedAltruist {
  Vec2 pos;
  std::vector<Pair> covers;  // the chosen orphanage's UP set, sorted
};

// A full cooperation coverage: every unsafe pair is within range of some
// altruist, and the certificate names one per pair.
struct Placement {
  std::vector<PlacedAltruist> altruists;
  int k = 0;
  std::string solver;
  std::vector<Pair> ups;
  int orphanage_count = 0;
  std::map<Pair, int> certificate;  // UP -> index into altruists
};

namespace detail {

// Fixed-universe bitset sized at runtime.
struct UpBits {
  std::vector<std::uint64_t> words;

  explicit UpBits(int n = 0) : words((n + 63) / 64, 0) {}

  void set(int i) { words[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool test(int i) const {
    return (words[i >> 6] >> (i & 63)) & 1;
  }
  int count() const {
    int c = 0;
    for (auto w : words) c += std::popcount(w);
    return c;
  }
  UpBits& operator|=(const UpBits& o) {
    for (std::size_t i = 0; i < words.size(); ++i) words[i] |= o.words[i];
    return *this;
  }
};

inline std::map<Pair, int> up_index(const UnsafePairSet& u) {
  std::map<Pair, int> idx;
  for (int i = 0; i < u.size(); ++i) idx.emplace(u.pairs[i].pair, i);
  return idx;
}

// Orphanage UP sets as index lists over U; pairs outside U are ignored.
inline std::vector<std::vector<int>> index_sets(const UnsafePairSet& u,
                                                const OrphanageSet& hs) {
  const auto idx = up_index(u);
  std::vector<std::vector<int>> sets(hs.orphanages.size());
  for (std::size_t s = 0; s < hs.orphanages.size(); ++s) {
    for (const Pair& p : hs.orphanages[s].ups) {
      auto it = idx.find(p);
      if (it != idx.end()) sets[s].push_back(it->second);
    }
  }
  return sets;
}

inline void require_coverable(int universe,
                              const std::vector<std::vector<int>>& sets) {
  std::vector<bool> seen(universe, false);
  for (const auto& s : sets)
    for (int e : s) seen[e] = true;
  for (int e = 0; e < universe; ++e)
    if (!seen[e])
      throw Infeasible("an unsafe pair is covered by no orphanage");
}

// Classic greedy: largest uncovered gain, ties to the lexicographically
// smallest UP set (which is the lowest index, since orphanages are sorted).
inline std::vector<int> greedy_indices(const UnsafePairSet& u,
                                       const OrphanageSet& hs) {
  const int m = u.size();
  if (m == 0) return {};
  const auto sets = index_sets(u, hs);
  require_coverable(m, sets);
  std::vector<bool> covered(m, false);
  int covered_count = 0;
  std::vector<int> chosen;
  while (covered_count < m) {
    int best = -1;
    int best_gain = 0;
    for (int s = 0; s < static_cast<int>(sets.size()); ++s) {
      int gain = 0;
      for (int e : sets[s])
        if (!covered[e]) ++gain;
      if (gain == 0) continue;
      if (best < 0 || gain > best_gain ||
          (gain == best_gain &&
           hs.orphanages[s].ups < hs.orphanages[best].ups)) {
        best = s;
        best_gain = gain;
      }
    }
    chosen.push_back(best);
    for (int e : sets[best]) {
      if (!covered[e]) {
        covered[e] = true;
        ++covered_count;
      }
    }
  }
  return chosen;
}

struct ExactSearch {
  int universe = 0;
  int max_set_size = 1;
  std::vector<UpBits> masks;
  std::vector<std::vector<int>> elem_sets;  // element -> sets covering it
  std::vector<int> best;
  std::vector<int> current;

  void run(const UpBits& covered, int covered_count) {
    if (covered_count == universe) {
      best = current;
      return;
    }
    const int lower =
        (universe - covered_count + max_set_size - 1) / max_set_size;
    if (static_cast<int>(current.size()) + lower >=
        static_cast<int>(best.size()))
      return;
    int pick = -1;
    for (int e = 0; e < universe; ++e) {
      if (covered.test(e)) continue;
      if (pick < 0 || elem_sets[e].size() < elem_sets[pick].size()) pick = e;
    }
    for (int s : elem_sets[pick]) {
      UpBits next = covered;
      next |= masks[s];
      current.push_back(s);
      run(next, next.count());
      current.pop_back();
    }
  }
};

inline Placement build_placement(const UnsafePairSet& u,
                                 const OrphanageSet& hs,
                                 const std::vector<int>& chosen,
                                 std::string solver) {
  Placement p;
  p.solver = std::move(solver);
  p.orphanage_count = hs.size();
  for (const auto& c : u.pairs) p.ups.push_back(c.pair);
  for (int s : chosen) {
    const Orphanage& h = hs.orphanages[s];
    p.altruists.push_back({h.witness.pos, h.ups});
  }
  p.k = static_cast<int>(p.altruists.size());
  for (const Pair& up : p.ups) {
    for (int a = 0; a < p.k; ++a) {
      const auto& covers = p.altruists[a].covers;
      if (std::binary_search(covers.begin(), covers.end(), up)) {
        p.certificate.emplace(up, a);
        break;
      }
    }
  }
  return p;
}

}  // namespace detail

inline Placement greedy_cover(const UnsafePairSet& u, const OrphanageSet& hs) {
  return detail::build_placement(u, hs, detail::greedy_indices(u, hs),
                                 "greedy");
}

// Minimum-cardinality cover; with a budget it answers the decision problem
// "does a cover of size <= budget exist" by throwing Infeasible when not.
inline Placement exact_cover(const UnsafePairSet& u, const OrphanageSet& hs,
                             std::optional<int> budget = std::nullopt,
                             int limit = kExactSolverLimit) {
  if (hs.size() > limit)
    throw LimitExceeded("orphanage set too large for the exact solver");
  const int m = u.size();
  std::vector<int> chosen;
  if (m > 0) {
    const auto sets = detail::index_sets(u, hs);
    detail::require_coverable(m, sets);

    detail::ExactSearch search;
    search.universe = m;
    search.elem_sets.assign(m, {});
    for (int s = 0; s < static_cast<int>(sets.size()); ++s) {
      detail::UpBits mask(m);
      for (int e : sets[s]) {
        mask.set(e);
        search.elem_sets[e].push_back(s);
      }
      search.masks.push_back(std::move(mask));
      search.max_set_size =
          std::max(search.max_set_size, static_cast<int>(sets[s].size()));
    }
    search.best = detail::greedy_indices(u, hs);
    search.run(detail::UpBits(m), 0);
    chosen = search.best;
    std::sort(chosen.begin(), chosen.end());
  }
  if (budget && static_cast<int>(chosen.size()) > *budget)
    throw Infeasible("minimum cover size " + std::to_string(chosen.size()) +
                     " exceeds budget " + std::to_string(*budget));
  return detail::build_placement(u, hs, chosen, "exact");
}

}  // namespace dish
