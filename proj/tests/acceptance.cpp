// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Each criterion runs in isolation so a failure never hides the others.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dish/classify.hpp"
#include "dish/geometry.hpp"
#include "dish/orphanage.hpp"
#include "dish/planner.hpp"
#include "dish/sim.hpp"
#include "dish/topology.hpp"
#include "dish/verify.hpp"
#include "support/fixtures.hpp"

using dish::Pair;
using dish::Placement;
using dish::PsmMode;
using dish::Topology;
using dish::UnsafePairSet;
using dish::sim::SimConfig;
using dish::sim::SimMetrics;
using dish::sim::SimResult;
using dish::sim::Traffic;

namespace {

constexpr std::uint64_t kSeed = 20260818;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!detail.str().empty()) detail << "; ";
    detail << what;
  }

  void note(const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << what;
  }
};

UnsafePairSet unsafe_of(const Topology& t, PsmMode mode) {
  return dish::enumerate_unsafe_pairs(dish::build_graph(t), mode);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// --- criterion 1: the triangle-with-leaves reference arrangement -----------

Verdict faces_reproduction() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const Topology t = load_fixture("faces.json");
  const UnsafePairSet u = unsafe_of(t, PsmMode::NoPsm);

  const Pair ij(t.index_of("i"), t.index_of("j"));
  const Pair jk(t.index_of("j"), t.index_of("k"));
  const Pair ik(t.index_of("i"), t.index_of("k"));
  std::set<Pair> got;
  for (const auto& c : u.pairs) got.insert(c.pair);
  v.require(u.size() == 3 && got == std::set<Pair>{ij, jk, ik},
            "unsafe pairs are not exactly the triangle");

  const auto hs = dish::enumerate_orphanages(t, u);
  v.require(hs.size() == 4, "expected 4 orphanages, got " +
                                std::to_string(hs.size()));

  const auto points = dish::all_intersection_points(dish::covering_disks(t, u));
  v.require(points.size() == 6, "expected 6 circle intersections, got " +
                                    std::to_string(points.size()));

  const Placement p = dish::plan(t, PsmMode::NoPsm, dish::Solver::Exact);
  v.require(p.k == 1, "minimum cover is not 1");
  v.require(p.altruists.size() == 1, "expected a single altruist");
  if (p.altruists.size() == 1) {
    std::set<Pair> covered(p.altruists[0].covers.begin(),
                           p.altruists[0].covers.end());
    v.require(covered == got, "the altruist's witness misses an unsafe pair");
  }
  v.require(dish::placement_certificate_valid(t, u, p),
            "placement certificate rejected");

  const double elapsed = seconds_since(start);
  v.require(elapsed < 1.0, "took " + fmt(elapsed) + "s, budget 1s");
  v.note("|U|=3, 4 orphanages, 6 intersections, k=1 in " + fmt(elapsed) + "s");
  return v;
}

// --- criterion 2: classifier vs scenario oracle over every small shape -----

Verdict classifier_oracle_equivalence() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const auto sweep = dish::verify::sweep_graph_classes(5);
  v.require(sweep.classes == 30,
            "expected 30 shapes, got " + std::to_string(sweep.classes));
  v.require(sweep.realize_failures == 0,
            std::to_string(sweep.realize_failures) + " shapes failed to lay out");
  v.require(sweep.skipped_non_disk == 1, "expected exactly K_{2,3} skipped");
  if (!sweep.disagreements.empty()) {
    const auto& d = sweep.disagreements.front();
    std::ostringstream msg;
    msg << sweep.disagreements.size() << " disagreement(s), first at pair ("
        << d.pair.a << "," << d.pair.b << ")";
    v.require(false, msg.str());
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 300.0, "took " + fmt(elapsed) + "s, budget 300s");
  v.note(std::to_string(sweep.edges_probed) + " edge probes across " +
         std::to_string(sweep.realized) + " layouts in " + fmt(elapsed) + "s");
  return v;
}

// --- criteria 3-5: randomized instance sweeps ------------------------------

Verdict face_count_bound() {
  Verdict v;
  const auto chk = dish::verify::check_face_bound(200, kSeed, 3, 8);
  v.require(chk.instances == 200, "generator starved");
  v.require(chk.violations == 0, chk.first_failure);
  v.note(std::to_string(chk.instances) + " instances within n(n-1)+2");
  return v;
}

Verdict grid_equivalence() {
  Verdict v;
  const auto chk = dish::verify::check_grid_equivalence(20, kSeed);
  v.require(chk.instances == 20, "generator starved");
  v.require(chk.violations == 0, chk.first_failure);
  v.note(std::to_string(chk.instances) + " instances, set families equal");
  return v;
}

Verdict cover_optimality() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const auto chk = dish::verify::check_cover_optimality(50, kSeed);
  v.require(chk.instances == 50, "generator starved");
  v.require(chk.violations == 0, chk.first_failure);
  const double elapsed = seconds_since(start);
  v.require(elapsed < 120.0, "took " + fmt(elapsed) + "s, budget 120s");
  v.note("50 instances, exact==brute, greedy in bound, " + fmt(elapsed) + "s");
  return v;
}

// --- criterion 6: a planned altruist silences a single-hop network ---------

Verdict altruist_sufficiency() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const Topology t = load_fixture("hexagon6.json");
  const Placement p = dish::plan(t, PsmMode::Psm, dish::Solver::Exact);
  v.require(p.k >= 1, "planner placed nothing");

  SimConfig base;
  base.topology = t;
  base.mode = PsmMode::Psm;
  base.traffic.kind = Traffic::Kind::Poisson;
  base.traffic.mean_interarrival_us = 12000;
  base.horizon_us = 25000000;
  base.record_trace = false;

  SimConfig covered = base;
  for (const auto& a : p.altruists) covered.altruists.push_back(a.pos);

  int min_initiated = INT_MAX;
  long covered_realized = 0;
  int bare_positive = 0;
  for (int s = 0; s < 20; ++s) {
    covered.seed = 1 + s;
    const SimMetrics m = dish::sim::run_simulation(covered).metrics;
    min_initiated = std::min(min_initiated, m.initiated);
    covered_realized += m.mcc_realized;

    SimConfig bare = base;
    bare.seed = 1 + s;
    if (dish::sim::run_simulation(bare).metrics.mcc_realized > 0)
      bare_positive += 1;
  }
  v.require(min_initiated >= 10000, "thinnest run initiated only " +
                                        std::to_string(min_initiated));
  v.require(covered_realized == 0,
            std::to_string(covered_realized) +
                " realized problem(s) despite full coverage");
  v.require(bare_positive >= 18, "only " + std::to_string(bare_positive) +
                                     "/20 uncovered runs realized a problem");
  v.note("min initiated " + std::to_string(min_initiated) +
         ", covered realized 0, bare positive " +
         std::to_string(bare_positive) + "/20, " +
         fmt(seconds_since(start)) + "s");
  return v;
}

// --- criterion 7: the shared altruist misses an overlapped announcement ----

Verdict two_cluster_counterexample() {
  Verdict v;
  const SimConfig cfg =
      dish::sim::load_sim_config(read_file(fixture_path("sim_two_cluster.json")));

  // Full cooperation coverage first: every unsafe pair within altruist reach.
  const UnsafePairSet u = unsafe_of(cfg.topology, cfg.mode);
  v.require(u.size() >= 1, "scenario has no unsafe pairs");
  for (const auto& c : u.pairs) {
    bool covered = false;
    for (const auto& a : cfg.altruists)
      covered = covered ||
                (dish::distance(a, cfg.topology.pos_of(c.pair.a)) <=
                     cfg.topology.radio_range &&
                 dish::distance(a, cfg.topology.pos_of(c.pair.b)) <=
                     cfg.topology.radio_range);
    v.require(covered, "an unsafe pair sits outside cooperation coverage");
  }

  const SimMetrics first = dish::sim::scripted_scenario(cfg).metrics;
  const SimMetrics second = dish::sim::scripted_scenario(cfg).metrics;
  v.require(first.mcc_realized >= 1, "no realized problem despite coverage");
  v.require(first.mcc_realized == second.mcc_realized &&
                dish::sim::metrics_csv_row(first) ==
                    dish::sim::metrics_csv_row(second),
            "replay diverged");
  v.note(std::to_string(first.mcc_realized) +
         " realized problem(s) under full coverage, replay stable");
  return v;
}

// --- criterion 8: byte-identical traces and metrics on replay --------------

Verdict determinism() {
  Verdict v;

  SimConfig random_cfg;
  random_cfg.topology = load_fixture("hexagon6.json");
  random_cfg.mode = PsmMode::Psm;
  random_cfg.traffic.kind = Traffic::Kind::Poisson;
  random_cfg.traffic.mean_interarrival_us = 12000;
  random_cfg.horizon_us = 2000000;
  random_cfg.record_trace = true;
  random_cfg.seed = kSeed;

  const SimConfig scripted_cfg = dish::sim::load_sim_config(
      read_file(fixture_path("sim_chain_conflict.json")));

  long trace_bytes = 0;
  const SimConfig* const configs[] = {&random_cfg, &scripted_cfg};
  for (const SimConfig* cfg : configs) {
    const SimResult a = dish::sim::run_simulation(*cfg);
    const SimResult b = dish::sim::run_simulation(*cfg);
    const std::string row_a = dish::sim::metrics_csv_row(a.metrics);
    const std::string trace_a = a.trace.to_jsonl();
    v.require(row_a == dish::sim::metrics_csv_row(b.metrics),
              "metrics rows differ between replays");
    v.require(trace_a == b.trace.to_jsonl(),
              "trace streams differ between replays");
    v.require(!trace_a.empty(), "trace unexpectedly empty");
    trace_bytes += static_cast<long>(trace_a.size());
  }
  v.note("poisson and scripted replays byte-identical (" +
         std::to_string(trace_bytes) + " trace bytes compared)");
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {"faces reproduction", faces_reproduction},
      {"classifier==oracle on all small shapes", classifier_oracle_equivalence},
      {"orphanage face-count bound", face_count_bound},
      {"arrangement==grid sampling", grid_equivalence},
      {"set-cover optimality", cover_optimality},
      {"planned altruist sufficiency", altruist_sufficiency},
      {"two-cluster counterexample", two_cluster_counterexample},
      {"byte-identical determinism", determinism},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    index += 1;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.ok = false;
      v.note(std::string("exception: ") + e.what());
    }
    std::printf("criterion %d [%s]: %s — %s\n", index, c.name,
                v.ok ? "PASS" : "FAIL", v.detail.str().c_str());
    std::fflush(stdout);
    if (!v.ok) failures += 1;
  }

  if (failures == 0) {
    std::printf("all 8 acceptance criteria satisfied\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}
