#pragma once

// Independent reference implementations and semantic cross-checks. The
// library is validated against this header from two sides: naive
// re-computations (exhaustive set cover, plane sampling, degree-free
// unsafe-pair rules) and scripted protocol scenarios that re-derive the
// classifier's verdicts from simulator ground truth. Everything here favours
// obviousness over speed.

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dish/classify.hpp"
#include "dish/core.hpp"
#include "dish/geometry.hpp"
#include "dish/orphanage.hpp"
#include "dish/set_cover.hpp"
#include "dish/sim.hpp"
#include "dish/topology.hpp"

namespace dish::verify {

using sim::i64;
using sim::MccRecord;
using sim::ScriptEvent;
using sim::scripted_scenario;
using sim::SimConfig;
using sim::SimMetrics;
using sim::Traffic;

// ---------------------------------------------------------------------------
// Graph construction helpers

inline AdjacencyGraph make_graph(int n,
                                 const std::vector<std::pair<int, int>>& edges) {
  AdjacencyGraph g;
  g.n = n;
  g.adj.assign(n, {});
  for (auto [u, v] : edges) {
    g.adj[u].push_back(v);
    g.adj[v].push_back(u);
    g.edges.emplace_back(u, v);
  }
  for (auto& a : g.adj) std::sort(a.begin(), a.end());
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

// Every labeled graph on n vertices, as edge lists over the pairs of K_n.
inline std::vector<std::vector<std::pair<int, int>>> all_graphs(int n) {
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) slots.emplace_back(i, j);
  std::vector<std::vector<std::pair<int, int>>> graphs;
  for (unsigned mask = 0; mask < (1u << slots.size()); ++mask) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (mask & (1u << s)) edges.push_back(slots[s]);
    graphs.push_back(std::move(edges));
  }
  return graphs;
}

// ---------------------------------------------------------------------------
// Combinatorial unsafe-pair oracles
//
// Derived directly from the scenario construction rather than the degree
// formula: a pair is unsafe without power saving iff two node-disjoint
// communicable pairs exist, one at each endpoint.

inline bool up_nopsm(const AdjacencyGraph& g, int i, int j) {
  for (int ip : g.adj[i]) {
    if (ip == j) continue;
    for (int jp : g.adj[j]) {
      if (jp == i || jp == ip) continue;
      return true;
    }
  }
  return false;
}

// With power saving a deaf terminal needs only one outside partner that can
// draw an endpoint away (or be slept through) while the other initiates.
inline bool up_psm_deaf(const AdjacencyGraph& g, int i, int j) {
  return g.degree(i) >= 2 || g.degree(j) >= 2;
}

// ---------------------------------------------------------------------------
// Set cover by exhaustive enumeration (for small set systems)

inline int brute_min_cover(int universe,
                           const std::vector<std::vector<int>>& sets) {
  const unsigned full = universe >= 32 ? 0 : (1u << universe) - 1;
  if (universe >= 32) throw std::runtime_error("universe too large");
  std::vector<unsigned> masks;
  for (const auto& s : sets) {
    unsigned m = 0;
    for (int e : s) m |= 1u << e;
    masks.push_back(m);
  }
  int best = INT_MAX;
  for (unsigned pick = 0; pick < (1u << masks.size()); ++pick) {
    unsigned covered = 0;
    int size = 0;
    for (std::size_t s = 0; s < masks.size(); ++s)
      if (pick & (1u << s)) {
        covered |= masks[s];
        ++size;
      }
    if (covered == full) best = std::min(best, size);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Grid-sampling coverage oracle
//
// Samples the plane at a fixed resolution, records every distinct covered-UP
// set seen, and computes the true minimum cover over those sets by dynamic
// programming on covered subsets.

struct GridSummary {
  std::set<std::vector<Pair>> covered_sets;
  int min_cover = 0;
};

inline GridSummary grid_summary(const Topology& t, const UnsafePairSet& u,
                                double step_divisor = 200.0) {
  GridSummary out;
  const int m = u.size();
  if (m == 0) return out;
  if (m > 20) throw std::runtime_error("too many unsafe pairs for the grid");

  const double r = t.radio_range;
  const double r2 = r * r;
  const double step = r / step_divisor;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  std::vector<std::pair<Vec2, Vec2>> ends;
  for (const auto& c : u.pairs) {
    const Vec2 pa = t.pos_of(c.pair.a);
    const Vec2 pb = t.pos_of(c.pair.b);
    ends.emplace_back(pa, pb);
    for (const auto& p : {pa, pb}) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  // Nothing farther than R from every endpoint can cover a pair.
  xmin -= r + step;
  xmax += r + step;
  ymin -= r + step;
  ymax += r + step;

  std::set<unsigned> masks;
  for (double x = xmin; x <= xmax; x += step) {
    for (double y = ymin; y <= ymax; y += step) {
      unsigned mask = 0;
      for (int i = 0; i < m; ++i) {
        const auto& [pa, pb] = ends[i];
        const double dxa = x - pa.x, dya = y - pa.y;
        if (dxa * dxa + dya * dya > r2) continue;
        const double dxb = x - pb.x, dyb = y - pb.y;
        if (dxb * dxb + dyb * dyb > r2) continue;
        mask |= 1u << i;
      }
      if (mask) masks.insert(mask);
    }
  }

  for (unsigned mask : masks) {
    std::vector<Pair> set;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) set.push_back(u.pairs[i].pair);
    out.covered_sets.insert(std::move(set));
  }

  const unsigned full = (1u << m) - 1;
  std::vector<int> dp(full + 1, INT_MAX);
  dp[0] = 0;
  for (unsigned s = 0; s <= full; ++s) {
    if (dp[s] == INT_MAX) continue;
    for (unsigned mask : masks) {
      const unsigned ns = s | mask;
      if (dp[ns] > dp[s] + 1) dp[ns] = dp[s] + 1;
    }
  }
  out.min_cover = dp[full] == INT_MAX ? -1 : dp[full];
  return out;
}

// ---------------------------------------------------------------------------
// Random well-separated coverage instances
//
// Points become UP-forming peers directly (classification is exercised
// elsewhere); rejection keeps the arrangement far from tangency and from
// triple points so that grid sampling at R/200 resolves every face. The
// triple-point margin is configurable: grid comparisons need a wide berth,
// pure counting checks only need to stay clear of degeneracy.

struct CoverageInstance {
  Topology t;
  UnsafePairSet u;
};

inline std::optional<CoverageInstance> try_random_instance(
    std::mt19937_64& rng, int min_pts = 3, int max_pts = 6,
    double triple_margin = 0.5) {
  const double r = 10.0;
  std::uniform_int_distribution<int> nd(min_pts, max_pts);
  std::uniform_real_distribution<double> reach(3.2, 9.2);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  const int n = nd(rng);
  // Chain each point off an earlier one so unsafe pairs actually form;
  // retry placements that land inside one of the guard bands. One third of
  // the instances split into two clusters no single point can serve.
  const int second_cluster_at = rng() % 3 == 0 ? n - n / 2 : n;
  std::vector<Vec2> pts{{0.0, 0.0}};
  for (int i = 1; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      Vec2 anchor{0.0, 0.0};
      if (i == second_cluster_at)
        anchor = {27.0 + reach(rng), reach(rng) - 6.2};
      else if (i > second_cluster_at)
        anchor = pts[second_cluster_at + rng() % (pts.size() - second_cluster_at)];
      else
        anchor = pts[rng() % pts.size()];
      const double d = reach(rng);
      const double th = angle(rng);
      const Vec2 p{anchor.x + d * std::cos(th), anchor.y + d * std::sin(th)};
      placed = true;
      for (const Vec2& q : pts) {
        const double dq = distance(p, q);
        if (dq < 3.0 ||                    // clear of coincidence
            (dq > 19.0 && dq < 21.0) ||    // clear of tangency
            (dq > 9.3 && dq < 10.7)) {     // clear of the edge rule
          placed = false;
          break;
        }
      }
      if (placed) pts.push_back(p);
    }
    if (!placed) return std::nullopt;
  }

  std::vector<std::pair<int, int>> ups;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (distance(pts[i], pts[j]) <= 9.3) ups.emplace_back(i, j);
  if (ups.empty()) return std::nullopt;

  std::vector<int> keep(n, -1);
  std::vector<Vec2> kept;
  for (auto [i, j] : ups) {
    for (int v : {i, j}) {
      if (keep[v] < 0) {
        keep[v] = static_cast<int>(kept.size());
        kept.push_back(pts[v]);
      }
    }
  }

  // Triple-point margin: every crossing stays off every third circle.
  std::vector<CoverageDisk> disks;
  for (std::size_t i = 0; i < kept.size(); ++i)
    disks.push_back({static_cast<int>(i), kept[i], r});
  for (std::size_t i = 0; i < disks.size(); ++i) {
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      for (const Vec2& p : circle_intersections(disks[i], disks[j])) {
        for (std::size_t k = 0; k < disks.size(); ++k) {
          if (k == i || k == j) continue;
          if (std::abs(distance(p, disks[k].center) - r) < triple_margin)
            return std::nullopt;
        }
      }
    }
  }

  CoverageInstance inst;
  inst.t.radio_range = r;
  for (std::size_t i = 0; i < kept.size(); ++i)
    inst.t.peers.push_back({"p" + std::to_string(i), kept[i]});
  inst.u.mode = PsmMode::NoPsm;
  for (auto [i, j] : ups) {
    PairClassification c;
    c.pair = Pair(keep[i], keep[j]);
    c.channel_conflict_up = true;
    c.deaf_terminal_up = true;
    c.triggering_condition = TriggeringCondition::CondA;
    inst.u.pairs.push_back(c);
  }
  std::sort(inst.u.pairs.begin(), inst.u.pairs.end(),
            [](const auto& a, const auto& b) { return a.pair < b.pair; });
  return inst;
}

inline CoverageInstance random_instance(std::mt19937_64& rng, int min_pts = 3,
                                        int max_pts = 6,
                                        double triple_margin = 0.5) {
  for (int tries = 0; tries < 20000; ++tries) {
    if (auto inst = try_random_instance(rng, min_pts, max_pts, triple_margin))
      return *inst;
  }
  throw std::runtime_error("instance generator starved");
}

// ---------------------------------------------------------------------------
// Connected graph catalogue
//
// One representative per isomorphism class. Both the classifier and the
// simulator see a topology only through its adjacency relation, so checking
// one representative of each shape checks them all.

struct GraphClass {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

inline bool edges_connected(int n,
                            const std::vector<std::pair<int, int>>& edges) {
  if (n <= 0) return false;
  std::vector<bool> seen(n, false);
  std::vector<int> reach{0};
  seen[0] = true;
  for (std::size_t i = 0; i < reach.size(); ++i) {
    for (auto [a, b] : edges) {
      if (a == reach[i] && !seen[b]) {
        seen[b] = true;
        reach.push_back(b);
      }
      if (b == reach[i] && !seen[a]) {
        seen[a] = true;
        reach.push_back(a);
      }
    }
  }
  return static_cast<int>(reach.size()) == n;
}

inline std::uint64_t relabeled_code(int n,
                                    const std::vector<std::vector<char>>& adj,
                                    const std::vector<int>& perm) {
  std::uint64_t code = 0;
  int bit = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++bit)
      if (adj[perm[i]][perm[j]]) code |= std::uint64_t{1} << bit;
  return code;
}

// Smallest adjacency encoding over every relabeling: equal iff isomorphic.
inline std::uint64_t canonical_code(int n,
                                    const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (auto [a, b] : edges) adj[a][b] = adj[b][a] = 1;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t best = ~std::uint64_t{0};
  do {
    best = std::min(best, relabeled_code(n, adj, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::vector<GraphClass> connected_graph_classes(int max_n) {
  std::vector<GraphClass> classes;
  for (int n = 2; n <= max_n; ++n) {
    std::set<std::uint64_t> seen;
    for (const auto& edges : all_graphs(n)) {
      if (!edges_connected(n, edges)) continue;
      const std::uint64_t code = canonical_code(n, edges);
      if (!seen.insert(code).second) continue;
      GraphClass g;
      g.n = n;
      int bit = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++bit)
          if (code >> bit & 1) g.edges.emplace_back(i, j);
      classes.push_back(std::move(g));
    }
  }
  return classes;
}

// Mantel's theorem: six edges on five vertices without a triangle is uniquely
// the complete bipartite K_{2,3} — the one connected shape on up to five
// vertices that no unit-disk layout can realize.
inline bool is_k23(const GraphClass& g) {
  if (g.n != 5 || g.edges.size() != 6) return false;
  std::vector<std::vector<char>> adj(5, std::vector<char>(5, 0));
  for (auto [a, b] : g.edges) adj[a][b] = adj[b][a] = 1;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      for (int k = j + 1; k < 5; ++k)
        if (adj[i][j] && adj[j][k] && adj[i][k]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Geometric realization
//
// Spring relaxation onto the plane: adjacent pairs are pulled well inside
// the radio range, non-adjacent pairs pushed well outside, so the resulting
// adjacency test is unambiguous. Restarts reseed the layout; shapes that are
// not unit-disk graphs exhaust every restart.

inline std::optional<Topology> realize_once(const GraphClass& g, double r,
                                            std::mt19937_64& rng) {
  const int n = g.n;
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (auto [a, b] : g.edges) adj[a][b] = adj[b][a] = 1;

  std::uniform_real_distribution<double> coord(0.0, 1.6 * r);
  std::vector<Vec2> p(n);
  for (auto& q : p) q = {coord(rng), coord(rng)};

  const auto valid = [&] {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d = distance(p[i], p[j]);
        if (adj[i][j] ? (d > 0.97 * r || d < 0.25 * r) : d < 1.03 * r)
          return false;
      }
    }
    return true;
  };

  for (int it = 0; it < 1200; ++it) {
    const double step = 0.45 * (1.0 - it / 1250.0);
    std::vector<Vec2> delta(n, {0.0, 0.0});
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double dx = p[j].x - p[i].x;
        double dy = p[j].y - p[i].y;
        double d = std::hypot(dx, dy);
        if (d < 1e-9) {
          dx = 1.0;
          dy = 0.0;
          d = 1e-9;
        }
        double want = d;
        if (adj[i][j] && d > 0.955 * r)
          want = 0.955 * r;
        else if (adj[i][j] && d < 0.35 * r)
          want = 0.35 * r;
        else if (!adj[i][j] && d < 1.045 * r)
          want = 1.045 * r;
        else
          continue;
        const double f = (want - d) / d * 0.5;
        delta[i].x -= dx * f;
        delta[i].y -= dy * f;
        delta[j].x += dx * f;
        delta[j].y += dy * f;
      }
    }
    for (int i = 0; i < n; ++i) {
      p[i].x += delta[i].x * step;
      p[i].y += delta[i].y * step;
    }
    if (it % 60 == 59 && valid()) break;
  }
  if (!valid()) return std::nullopt;

  Topology t;
  t.radio_range = r;
  for (int i = 0; i < n; ++i)
    t.peers.push_back({"p" + std::to_string(i), p[i]});

  // The layout must reproduce the requested adjacency exactly.
  const AdjacencyGraph got = build_graph(t);
  std::vector<Pair> want_edges;
  for (auto [a, b] : g.edges) want_edges.emplace_back(a, b);
  std::sort(want_edges.begin(), want_edges.end());
  if (got.edges != want_edges) return std::nullopt;
  return t;
}

inline std::optional<Topology> realize_class(const GraphClass& g,
                                             double r = 10.0,
                                             int restarts = 150) {
  const std::uint64_t code = canonical_code(g.n, g.edges);
  for (int s = 0; s < restarts; ++s) {
    std::mt19937_64 rng(code * 0x9E3779B97F4A7C15ULL + 1315423911ULL * s + g.n);
    if (auto t = realize_once(g, r, rng)) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scenario oracle
//
// The semantic counterpart of classify_pair: an edge is unsafe iff some
// scripted interleaving over at most two disjoint partner choices makes the
// simulator record a coordination problem created by that pair. Creation
// records are used — not realized counts — because a cooperating bystander
// turning a problem into a prevention does not make the pair safe.
//
// Construction offsets, in µs at the default timing (all far from any frame
// boundary): the decoy exchange u↔x' commits by 1151 and occupies [1151,
// 3351]; the reference exchange v↔y' starts its handshake around 1170,
// unheard by u, and holds its channel until 7479; u returns at 3351, sits
// out the settle window, and probes around 4251 — well inside the reference
// exchange. The sleeping variants hide u under a directed sleep instead of
// the decoy: the reference handshake is over by 1160, u wakes at 1400 and
// probes after its settle window at 2300.

inline constexpr i64 kDecoyStart = 0;
inline constexpr i64 kDecoyDataUs = 2000;
inline constexpr i64 kReferenceStart = 1120;
inline constexpr i64 kReferenceDataUs = 5000;
inline constexpr i64 kProbeStart = 3400;
inline constexpr i64 kSleepUntil = 1400;
inline constexpr i64 kSleepProbeStart = 1450;
inline constexpr i64 kProbeHorizonUs = 40000;

inline ScriptEvent arrival_event(i64 t, const std::string& node,
                                 const std::string& dst, int channel,
                                 i64 data_us) {
  ScriptEvent e;
  e.kind = ScriptEvent::Kind::Arrival;
  e.time = t;
  e.node = node;
  e.dst = dst;
  e.channel = channel;
  e.data_us = data_us;
  return e;
}

inline ScriptEvent sleep_event(i64 t, const std::string& node, i64 until) {
  ScriptEvent e;
  e.kind = ScriptEvent::Kind::Sleep;
  e.time = t;
  e.node = node;
  e.until = until;
  return e;
}

inline SimConfig probe_config(const Topology& t, PsmMode mode) {
  SimConfig cfg;
  cfg.topology = t;
  cfg.mode = mode;
  cfg.traffic.kind = Traffic::Kind::Scripted;
  cfg.horizon_us = kProbeHorizonUs;
  cfg.record_trace = false;
  return cfg;
}

// u misses the reference handshake while away on a decoy exchange, returns
// with a blank table, and proposes the channel v and y' still occupy.
inline SimConfig conflict_after_return(const Topology& t, PsmMode mode, int u,
                                       int v, int xp, int yp) {
  SimConfig cfg = probe_config(t, mode);
  const auto id = [&](int i) { return t.peers[i].id; };
  cfg.traffic.events = {
      arrival_event(kDecoyStart, id(u), id(xp), 2, kDecoyDataUs),
      arrival_event(kReferenceStart, id(v), id(yp), 1, kReferenceDataUs),
      arrival_event(kProbeStart, id(u), id(xp), 1, 0),
  };
  return cfg;
}

// Same blind spot, but the probe addresses v itself, which is still away.
inline SimConfig deaf_after_return(const Topology& t, PsmMode mode, int u,
                                   int v, int xp, int yp) {
  SimConfig cfg = probe_config(t, mode);
  const auto id = [&](int i) { return t.peers[i].id; };
  cfg.traffic.events = {
      arrival_event(kDecoyStart, id(u), id(xp), 2, kDecoyDataUs),
      arrival_event(kReferenceStart, id(v), id(yp), 1, kReferenceDataUs),
      arrival_event(kProbeStart, id(u), id(v), 0, 0),
  };
  return cfg;
}

// Power-saving variants: u sleeps through the reference handshake instead of
// being away on a decoy exchange.
inline SimConfig conflict_after_sleep(const Topology& t, int u, int v, int xp,
                                      int yp) {
  SimConfig cfg = probe_config(t, PsmMode::Psm);
  const auto id = [&](int i) { return t.peers[i].id; };
  cfg.traffic.events = {
      sleep_event(0, id(u), kSleepUntil),
      sleep_event(0, id(xp), kSleepUntil),
      arrival_event(0, id(v), id(yp), 1, kReferenceDataUs),
      arrival_event(kSleepProbeStart, id(u), id(xp), 1, 0),
  };
  return cfg;
}

inline SimConfig deaf_after_sleep(const Topology& t, int u, int v, int yp) {
  SimConfig cfg = probe_config(t, PsmMode::Psm);
  const auto id = [&](int i) { return t.peers[i].id; };
  cfg.traffic.events = {
      sleep_event(0, id(u), kSleepUntil),
      arrival_event(0, id(v), id(yp), 1, kReferenceDataUs),
      arrival_event(kSleepProbeStart, id(u), id(v), 0, 0),
  };
  return cfg;
}

// Did this creation involve u on one side and v on the other? Deaf-terminal
// records name the pair directly; conflicts split it across the creating
// handshake and the exchange it clashed with.
inline bool attributes_to(const MccRecord& r, bool deaf, int u, int v) {
  if (r.deaf != deaf) return false;
  if (deaf)
    return (r.src == u && r.dst == v) || (r.src == v && r.dst == u);
  const bool u_new = r.src == u || r.dst == u;
  const bool v_new = r.src == v || r.dst == v;
  const bool u_old = r.other_a == u || r.other_b == u;
  const bool v_old = r.other_a == v || r.other_b == v;
  return (u_new && v_old) || (v_new && u_old);
}

inline bool creates_mcc(const SimConfig& cfg, bool deaf, int u, int v) {
  const SimMetrics m = scripted_scenario(cfg).metrics;
  for (const auto& r : m.mcc_records)
    if (attributes_to(r, deaf, u, v)) return true;
  return false;
}

struct ProbeVerdict {
  bool channel_conflict = false;
  bool deaf_terminal = false;
};

inline ProbeVerdict scenario_probe(const Topology& t, const AdjacencyGraph& g,
                                   PsmMode mode, int u, int v) {
  ProbeVerdict out;
  std::vector<int> xs, ys;
  for (int w : g.adj[u])
    if (w != v) xs.push_back(w);
  for (int w : g.adj[v])
    if (w != u) ys.push_back(w);

  const bool want_busy_deaf = mode == PsmMode::NoPsm;
  const auto pair_probes_done = [&] {
    return out.channel_conflict && (!want_busy_deaf || out.deaf_terminal);
  };
  for (int xp : xs) {
    if (pair_probes_done()) break;
    for (int yp : ys) {
      if (xp == yp) continue;
      if (pair_probes_done()) break;
      if (!out.channel_conflict) {
        const SimConfig cfg = mode == PsmMode::Psm
                                  ? conflict_after_sleep(t, u, v, xp, yp)
                                  : conflict_after_return(t, mode, u, v, xp, yp);
        out.channel_conflict = creates_mcc(cfg, /*deaf=*/false, u, v);
      }
      if (want_busy_deaf && !out.deaf_terminal)
        out.deaf_terminal = creates_mcc(deaf_after_return(t, mode, u, v, xp, yp),
                                        /*deaf=*/true, u, v);
    }
  }

  if (mode == PsmMode::Psm && !out.deaf_terminal) {
    for (int yp : ys) {
      if (creates_mcc(deaf_after_sleep(t, u, v, yp), /*deaf=*/true, u, v)) {
        out.deaf_terminal = true;
        break;
      }
    }
    for (int xp : xs) {
      if (out.deaf_terminal) break;
      if (creates_mcc(deaf_after_sleep(t, v, u, xp), /*deaf=*/true, u, v))
        out.deaf_terminal = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classifier vs scenario oracle

struct EdgeComparison {
  Pair pair;
  PsmMode mode = PsmMode::NoPsm;
  bool classifier_conflict = false;
  bool classifier_deaf = false;
  bool oracle_conflict = false;
  bool oracle_deaf = false;

  bool agree() const {
    return classifier_conflict == oracle_conflict &&
           classifier_deaf == oracle_deaf;
  }
};

using EdgeClassifier =
    std::function<PairClassification(const AdjacencyGraph&, int, int, PsmMode)>;

// Probes every edge of the topology and sets classifier and oracle verdicts
// side by side. A substitute classifier can be injected to prove the
// comparison actually detects faults.
inline std::vector<EdgeComparison> compare_classification(
    const Topology& t, PsmMode mode, const EdgeClassifier& classifier = {}) {
  const AdjacencyGraph g = build_graph(t);
  std::vector<EdgeComparison> out;
  for (const Pair& e : g.edges) {
    const PairClassification c = classifier
                                     ? classifier(g, e.a, e.b, mode)
                                     : classify_pair(g, e.a, e.b, mode);
    const ProbeVerdict p = scenario_probe(t, g, mode, e.a, e.b);
    EdgeComparison cmp;
    cmp.pair = e;
    cmp.mode = mode;
    cmp.classifier_conflict = c.channel_conflict_up;
    cmp.classifier_deaf = c.deaf_terminal_up;
    cmp.oracle_conflict = p.channel_conflict;
    cmp.oracle_deaf = p.deaf_terminal;
    out.push_back(cmp);
  }
  return out;
}

struct ClassSweep {
  int classes = 0;
  int realized = 0;
  int skipped_non_disk = 0;   // provably non-unit-disk shapes (K_{2,3})
  int realize_failures = 0;   // realizable shapes the layout missed: must be 0
  int edges_probed = 0;
  std::vector<EdgeComparison> disagreements;
};

// Every connected shape on 2..max_n vertices, realized and probed edge by
// edge in both power modes.
inline ClassSweep sweep_graph_classes(int max_n) {
  ClassSweep sweep;
  for (const GraphClass& g : connected_graph_classes(max_n)) {
    sweep.classes += 1;
    const auto t = realize_class(g);
    if (!t) {
      (is_k23(g) ? sweep.skipped_non_disk : sweep.realize_failures) += 1;
      continue;
    }
    sweep.realized += 1;
    for (PsmMode mode : {PsmMode::NoPsm, PsmMode::Psm}) {
      for (const EdgeComparison& c : compare_classification(*t, mode)) {
        sweep.edges_probed += 1;
        if (!c.agree()) sweep.disagreements.push_back(c);
      }
    }
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Randomized instance sweeps shared by the test suite and the CLI

struct InstanceCheck {
  int instances = 0;
  int violations = 0;
  std::string first_failure;
};

// |H| never exceeds the arrangement face bound n(n-1)+2 in covering disks.
inline InstanceCheck check_face_bound(int rounds, std::uint64_t seed,
                                      int min_pts = 3, int max_pts = 8) {
  std::mt19937_64 rng(seed);
  InstanceCheck out;
  for (int i = 0; i < rounds; ++i) {
    const CoverageInstance inst =
        random_instance(rng, min_pts, max_pts, /*triple_margin=*/0.05);
    const OrphanageSet hs = enumerate_orphanages(inst.t, inst.u);
    out.instances += 1;
    const int n = hs.disk_count;
    if (hs.size() > n * (n - 1) + 2) {
      out.violations += 1;
      if (out.first_failure.empty()) {
        std::ostringstream msg;
        msg << "instance " << i << ": " << hs.size() << " orphanages from "
            << n << " disks";
        out.first_failure = msg.str();
      }
    }
  }
  return out;
}

// The orphanage family from arrangement candidates equals the family of
// distinct covered-UP sets seen by plane sampling at R/200.
inline InstanceCheck check_grid_equivalence(int rounds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InstanceCheck out;
  for (int i = 0; i < rounds; ++i) {
    const CoverageInstance inst = random_instance(rng);
    const OrphanageSet hs = enumerate_orphanages(inst.t, inst.u);
    const GridSummary grid = grid_summary(inst.t, inst.u);
    std::set<std::vector<Pair>> families;
    for (const auto& h : hs.orphanages) families.insert(h.ups);
    out.instances += 1;
    if (families != grid.covered_sets) {
      out.violations += 1;
      if (out.first_failure.empty()) {
        std::ostringstream msg;
        msg << "instance " << i << ": " << families.size()
            << " orphanage sets vs " << grid.covered_sets.size()
            << " grid sets";
        out.first_failure = msg.str();
      }
    }
  }
  return out;
}

// Exact cover equals exhaustive enumeration; greedy stays within its
// logarithmic factor.
inline InstanceCheck check_cover_optimality(int rounds, std::uint64_t seed,
                                            int max_orphanages = 15) {
  std::mt19937_64 rng(seed);
  InstanceCheck out;
  for (int i = 0; i < rounds; ++i) {
    CoverageInstance inst = random_instance(rng);
    OrphanageSet hs = enumerate_orphanages(inst.t, inst.u);
    while (hs.size() > max_orphanages) {
      inst = random_instance(rng);
      hs = enumerate_orphanages(inst.t, inst.u);
    }
    std::map<Pair, int> index;
    for (int e = 0; e < inst.u.size(); ++e) index[inst.u.pairs[e].pair] = e;
    std::vector<std::vector<int>> sets;
    for (const auto& h : hs.orphanages) {
      std::vector<int> s;
      for (const Pair& up : h.ups) s.push_back(index.at(up));
      sets.push_back(std::move(s));
    }
    const int best = brute_min_cover(inst.u.size(), sets);
    const Placement exact = exact_cover(inst.u, hs, std::nullopt, 40);
    const Placement greedy = greedy_cover(inst.u, hs);
    out.instances += 1;
    const double bound =
        (std::log(static_cast<double>(inst.u.size())) + 1.0) * exact.k;
    if (exact.k != best || greedy.k < exact.k ||
        static_cast<double>(greedy.k) > bound) {
      out.violations += 1;
      if (out.first_failure.empty()) {
        std::ostringstream msg;
        msg << "instance " << i << ": exact " << exact.k << ", brute " << best
            << ", greedy " << greedy.k;
        out.first_failure = msg.str();
      }
    }
  }
  return out;
}

}  // namespace dish::verify
