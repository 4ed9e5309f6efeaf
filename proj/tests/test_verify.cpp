#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "dish/classify.hpp"
#include "dish/topology.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using dish::AdjacencyGraph;
using dish::Pair;
using dish::PairClassification;
using dish::PsmMode;
using dish::Topology;
using dish::sim::MccRecord;
using dish::sim::ScriptEvent;
using dish::sim::SimConfig;
using oracle::EdgeClassifier;
using oracle::EdgeComparison;
using oracle::GraphClass;

namespace {

std::map<int, int> classes_by_order(const std::vector<GraphClass>& classes) {
  std::map<int, int> by_n;
  for (const GraphClass& g : classes) by_n[g.n] += 1;
  return by_n;
}

std::vector<int> degrees_of(const GraphClass& g) {
  std::vector<int> deg(g.n, 0);
  for (auto [a, b] : g.edges) {
    deg[a] += 1;
    deg[b] += 1;
  }
  return deg;
}

// Relabel a class's edge list through a permutation of its vertices.
std::vector<std::pair<int, int>> relabel(
    const std::vector<std::pair<int, int>>& edges,
    const std::vector<int>& perm) {
  std::vector<std::pair<int, int>> out;
  for (auto [a, b] : edges) out.emplace_back(perm[a], perm[b]);
  return out;
}

std::vector<Pair> sorted_edge_pairs(const GraphClass& g) {
  std::vector<Pair> want;
  for (auto [a, b] : g.edges) want.emplace_back(a, b);
  std::sort(want.begin(), want.end());
  return want;
}

}  // namespace

TEST_CASE("connected graph catalogue is frozen") {
  const auto classes = oracle::connected_graph_classes(5);
  REQUIRE(classes.size() == 30);

  const auto by_n = classes_by_order(classes);
  CHECK(by_n.at(2) == 1);
  CHECK(by_n.at(3) == 2);
  CHECK(by_n.at(4) == 6);
  CHECK(by_n.at(5) == 21);

  std::map<int, std::set<std::uint64_t>> codes;
  for (const GraphClass& g : classes) {
    CHECK(oracle::edges_connected(g.n, g.edges));
    const int m = static_cast<int>(g.edges.size());
    CHECK(m >= g.n - 1);               // connected needs a spanning tree
    CHECK(m <= g.n * (g.n - 1) / 2);   // and fits inside K_n
    // One representative per shape: canonical codes never repeat.
    CHECK(codes[g.n].insert(oracle::canonical_code(g.n, g.edges)).second);
  }
}

TEST_CASE("canonical code is a relabeling invariant") {
  std::mt19937_64 rng(7);
  for (const GraphClass& g : oracle::connected_graph_classes(5)) {
    const std::uint64_t code = oracle::canonical_code(g.n, g.edges);

    std::vector<int> reversed(g.n);
    for (int i = 0; i < g.n; ++i) reversed[i] = g.n - 1 - i;
    CHECK(oracle::canonical_code(g.n, relabel(g.edges, reversed)) == code);

    std::vector<int> shuffled(g.n);
    std::iota(shuffled.begin(), shuffled.end(), 0);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(oracle::canonical_code(g.n, relabel(g.edges, shuffled)) == code);
  }
}

TEST_CASE("realizer reproduces every shape of order at most four") {
  for (const GraphClass& g : oracle::connected_graph_classes(4)) {
    const auto t = oracle::realize_class(g);
    REQUIRE(t.has_value());
    CHECK(t->radio_range == 10.0);
    CHECK(static_cast<int>(t->peers.size()) == g.n);
    CHECK(dish::build_graph(*t).edges == sorted_edge_pairs(g));
  }
}

TEST_CASE("K_{2,3} is recognized and defeats the realizer") {
  const auto classes = oracle::connected_graph_classes(5);
  std::vector<const GraphClass*> k23s;
  for (const GraphClass& g : classes)
    if (oracle::is_k23(g)) k23s.push_back(&g);
  REQUIRE(k23s.size() == 1);

  const GraphClass& k23 = *k23s.front();
  CHECK(k23.n == 5);
  CHECK(k23.edges.size() == 6);
  // Six edges on five vertices appear in several shapes; only the
  // triangle-free one is flagged, and only that one has no disk layout.
  int six_edge_classes = 0;
  for (const GraphClass& g : classes)
    if (g.n == 5 && g.edges.size() == 6) six_edge_classes += 1;
  CHECK(six_edge_classes > 1);
  CHECK_FALSE(oracle::realize_class(k23).has_value());
}

TEST_CASE("the five-cycle realizes with exact adjacency") {
  const auto classes = oracle::connected_graph_classes(5);
  const GraphClass* c5 = nullptr;
  for (const GraphClass& g : classes) {
    if (g.n != 5 || g.edges.size() != 5) continue;
    const auto deg = degrees_of(g);
    if (std::all_of(deg.begin(), deg.end(), [](int d) { return d == 2; })) {
      c5 = &g;
      break;
    }
  }
  REQUIRE(c5 != nullptr);

  const auto t = oracle::realize_class(*c5);
  REQUIRE(t.has_value());
  const AdjacencyGraph got = dish::build_graph(*t);
  CHECK(got.edges == sorted_edge_pairs(*c5));
  for (int i = 0; i < 5; ++i) CHECK(got.degree(i) == 2);
}

TEST_CASE("degree-free oracles agree with hand verdicts") {
  const AdjacencyGraph path4 =
      oracle::make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  CHECK(oracle::up_nopsm(path4, 1, 2));        // partners 0 and 3 exist
  CHECK_FALSE(oracle::up_nopsm(path4, 0, 1));  // the leaf has none
  CHECK(oracle::up_psm_deaf(path4, 0, 1));     // one busy endpoint suffices

  const AdjacencyGraph star =
      oracle::make_graph(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK_FALSE(oracle::up_nopsm(star, 0, 1));  // every leaf is partnerless
  CHECK(oracle::up_psm_deaf(star, 0, 1));

  const AdjacencyGraph triangle =
      oracle::make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  // The lone outside partner is shared, so no disjoint pair exists.
  CHECK_FALSE(oracle::up_nopsm(triangle, 0, 1));
  CHECK(oracle::up_psm_deaf(triangle, 0, 1));

  const AdjacencyGraph edge = oracle::make_graph(2, {{0, 1}});
  CHECK_FALSE(oracle::up_nopsm(edge, 0, 1));
  CHECK_FALSE(oracle::up_psm_deaf(edge, 0, 1));

  const AdjacencyGraph k4 = oracle::make_graph(
      4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK(oracle::up_nopsm(k4, 0, 1));  // 2 and 3 split across the endpoints
}

TEST_CASE("exhaustive set cover on hand instances") {
  CHECK(oracle::brute_min_cover(3, {{0}, {1}, {2}, {0, 1, 2}}) == 1);
  CHECK(oracle::brute_min_cover(3, {{0, 1}, {1, 2}}) == 2);
  // The classic greedy trap still has an exact answer of two.
  CHECK(oracle::brute_min_cover(4, {{0, 1, 2}, {0, 1}, {2, 3}}) == 2);
  CHECK(oracle::brute_min_cover(1, {{0}}) == 1);
}

TEST_CASE("instance generator honours its guard bands") {
  std::mt19937_64 rng(20260818);
  for (int round = 0; round < 12; ++round) {
    const oracle::CoverageInstance inst = oracle::random_instance(rng);
    const int n = static_cast<int>(inst.t.peers.size());
    REQUIRE(n >= 2);
    CHECK(n <= 6);
    CHECK(inst.t.radio_range == 10.0);
    CHECK(inst.u.mode == PsmMode::NoPsm);
    REQUIRE(inst.u.size() >= 1);
    CHECK(std::is_sorted(
        inst.u.pairs.begin(), inst.u.pairs.end(),
        [](const auto& a, const auto& b) { return a.pair < b.pair; }));

    std::set<int> touched;
    for (const PairClassification& c : inst.u.pairs) {
      CHECK(dish::distance(inst.t.peers[c.pair.a].pos,
                           inst.t.peers[c.pair.b].pos) <= 9.3);
      touched.insert(c.pair.a);
      touched.insert(c.pair.b);
    }
    // Every surviving peer takes part in at least one unsafe pair.
    CHECK(static_cast<int>(touched.size()) == n);

    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d =
            dish::distance(inst.t.peers[i].pos, inst.t.peers[j].pos);
        CHECK(d >= 3.0);
        CHECK_FALSE((d > 9.3 && d < 10.7));
        CHECK_FALSE((d > 19.0 && d < 21.0));
      }
    }
  }

  // Same seed, same stream of instances.
  std::mt19937_64 a(99), b(99);
  for (int round = 0; round < 4; ++round) {
    const auto ia = oracle::random_instance(a);
    const auto ib = oracle::random_instance(b);
    REQUIRE(ia.t.peers.size() == ib.t.peers.size());
    for (std::size_t i = 0; i < ia.t.peers.size(); ++i) {
      CHECK(ia.t.peers[i].pos.x == ib.t.peers[i].pos.x);
      CHECK(ia.t.peers[i].pos.y == ib.t.peers[i].pos.y);
    }
  }
}

TEST_CASE("scenario probes agree with the classifier on fixtures") {
  const Topology faces = load_fixture("faces.json");
  const Topology path3 = load_fixture("path3.json");

  SECTION("triangle with leaves, always-on receivers") {
    const auto cmp = oracle::compare_classification(faces, PsmMode::NoPsm);
    REQUIRE(cmp.size() == 6);
    int unsafe = 0;
    for (const EdgeComparison& c : cmp) {
      CHECK(c.agree());
      CHECK(c.classifier_conflict == c.classifier_deaf);  // NoPsm ties them
      if (c.classifier_conflict) unsafe += 1;
    }
    CHECK(unsafe == 3);  // the triangle; leaf edges stay safe
  }

  SECTION("triangle with leaves, power saving") {
    const auto cmp = oracle::compare_classification(faces, PsmMode::Psm);
    REQUIRE(cmp.size() == 6);
    int conflict = 0, deaf = 0;
    for (const EdgeComparison& c : cmp) {
      CHECK(c.agree());
      if (c.classifier_conflict) conflict += 1;
      if (c.classifier_deaf) deaf += 1;
    }
    CHECK(conflict == 3);  // still only the triangle
    CHECK(deaf == 6);      // but sleep endangers every edge here
  }

  SECTION("three-node path, power saving") {
    const auto cmp = oracle::compare_classification(path3, PsmMode::Psm);
    REQUIRE(cmp.size() == 2);
    for (const EdgeComparison& c : cmp) {
      CHECK(c.agree());
      CHECK_FALSE(c.classifier_conflict);
      CHECK(c.classifier_deaf);
    }
  }

  SECTION("three-node path, always-on receivers: nothing unsafe") {
    for (const EdgeComparison& c :
         oracle::compare_classification(path3, PsmMode::NoPsm)) {
      CHECK(c.agree());
      CHECK_FALSE(c.classifier_conflict);
      CHECK_FALSE(c.classifier_deaf);
    }
  }
}

TEST_CASE("a broken classifier is caught by the comparison") {
  const Topology faces = load_fixture("faces.json");

  const EdgeClassifier blind_to_conflicts =
      [](const AdjacencyGraph& g, int a, int b, PsmMode mode) {
        PairClassification c = dish::classify_pair(g, a, b, mode);
        c.channel_conflict_up = false;
        return c;
      };
  const EdgeClassifier cries_wolf =
      [](const AdjacencyGraph& g, int a, int b, PsmMode mode) {
        PairClassification c = dish::classify_pair(g, a, b, mode);
        c.channel_conflict_up = true;
        c.deaf_terminal_up = true;
        return c;
      };

  std::vector<Pair> missed;
  for (const EdgeComparison& c :
       oracle::compare_classification(faces, PsmMode::NoPsm,
                                      blind_to_conflicts))
    if (!c.agree()) missed.push_back(c.pair);
  // Exactly the triangle edges surface, named pair by pair.
  CHECK(missed == std::vector<Pair>{{0, 1}, {0, 2}, {1, 2}});

  std::vector<Pair> invented;
  for (const EdgeComparison& c :
       oracle::compare_classification(faces, PsmMode::NoPsm, cries_wolf))
    if (!c.agree()) invented.push_back(c.pair);
  // And the over-reporter trips on exactly the leaf edges.
  CHECK(invented == std::vector<Pair>{{0, 3}, {1, 4}, {2, 5}});
}

TEST_CASE("probe comparisons are deterministic") {
  const Topology faces = load_fixture("faces.json");
  const auto first = oracle::compare_classification(faces, PsmMode::Psm);
  const auto second = oracle::compare_classification(faces, PsmMode::Psm);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].pair == second[i].pair);
    CHECK(first[i].classifier_conflict == second[i].classifier_conflict);
    CHECK(first[i].classifier_deaf == second[i].classifier_deaf);
    CHECK(first[i].oracle_conflict == second[i].oracle_conflict);
    CHECK(first[i].oracle_deaf == second[i].oracle_deaf);
  }
}

TEST_CASE("probe scripts pin the frozen timeline") {
  const Topology path4 = load_fixture("path4.json");

  const SimConfig ret =
      oracle::conflict_after_return(path4, PsmMode::NoPsm, 1, 2, 0, 3);
  REQUIRE(ret.traffic.events.size() == 3);
  const auto& decoy = ret.traffic.events[0];
  const auto& reference = ret.traffic.events[1];
  const auto& probe = ret.traffic.events[2];
  CHECK(decoy.time == 0);
  CHECK(decoy.channel == 2);
  CHECK(decoy.data_us == 2000);
  CHECK(reference.time == 1120);
  CHECK(reference.channel == 1);
  CHECK(reference.data_us == 5000);
  CHECK(probe.time == 3400);
  CHECK(probe.channel == 1);  // proposes the channel still in use
  CHECK(probe.data_us == 0);
  CHECK(ret.horizon_us == 40000);
  CHECK(ret.traffic.kind == dish::sim::Traffic::Kind::Scripted);

  const SimConfig deaf = oracle::deaf_after_sleep(path4, 1, 2, 3);
  REQUIRE(deaf.traffic.events.size() == 3);
  CHECK(deaf.traffic.events[0].kind == ScriptEvent::Kind::Sleep);
  CHECK(deaf.traffic.events[0].until == 1400);
  CHECK(deaf.traffic.events[2].time == 1450);
  CHECK(deaf.traffic.events[2].dst == path4.peers[2].id);
  CHECK(deaf.mode == PsmMode::Psm);

  // The probe itself: the middle edge of a four-node path is the canonical
  // unsafe pair, its end edges the canonical safe ones.
  const AdjacencyGraph g = dish::build_graph(path4);
  const auto mid = oracle::scenario_probe(path4, g, PsmMode::NoPsm, 1, 2);
  CHECK(mid.channel_conflict);
  CHECK(mid.deaf_terminal);
  const auto end = oracle::scenario_probe(path4, g, PsmMode::NoPsm, 0, 1);
  CHECK_FALSE(end.channel_conflict);
  CHECK_FALSE(end.deaf_terminal);
}

TEST_CASE("creation records attribute precisely") {
  MccRecord conflict;
  conflict.deaf = false;
  conflict.src = 1;
  conflict.dst = 0;
  conflict.other_a = 2;
  conflict.other_b = 3;
  // One endpoint in the creating handshake, the other in the clash.
  CHECK(oracle::attributes_to(conflict, false, 1, 2));
  CHECK(oracle::attributes_to(conflict, false, 3, 0));
  CHECK_FALSE(oracle::attributes_to(conflict, false, 0, 1));  // both new
  CHECK_FALSE(oracle::attributes_to(conflict, false, 2, 3));  // both old
  CHECK_FALSE(oracle::attributes_to(conflict, true, 1, 2));   // kind mismatch

  MccRecord deaf;
  deaf.deaf = true;
  deaf.src = 4;
  deaf.dst = 5;
  CHECK(oracle::attributes_to(deaf, true, 4, 5));
  CHECK(oracle::attributes_to(deaf, true, 5, 4));  // order-free
  CHECK_FALSE(oracle::attributes_to(deaf, true, 4, 6));
  CHECK_FALSE(oracle::attributes_to(deaf, false, 4, 5));
}

TEST_CASE("class sweep stays clean through order four") {
  const oracle::ClassSweep sweep = oracle::sweep_graph_classes(4);
  CHECK(sweep.classes == 9);
  CHECK(sweep.realized == 9);
  CHECK(sweep.skipped_non_disk == 0);
  CHECK(sweep.realize_failures == 0);
  CHECK(sweep.edges_probed == 62);  // 31 edges across the classes, two modes
  CHECK(sweep.disagreements.empty());
}

TEST_CASE("randomized sweeps come back clean at smoke scale") {
  const auto faces = oracle::check_face_bound(6, 20260818);
  CHECK(faces.instances == 6);
  CHECK(faces.violations == 0);
  CHECK(faces.first_failure.empty());

  const auto grid = oracle::check_grid_equivalence(2, 20260818);
  CHECK(grid.instances == 2);
  CHECK(grid.violations == 0);

  const auto cover = oracle::check_cover_optimality(3, 20260818);
  CHECK(cover.instances == 3);
  CHECK(cover.violations == 0);
}
