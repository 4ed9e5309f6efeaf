#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dish/core.hpp"
#include "json.hpp"

namespace dish {

struct Peer {
  std::string id;
  Vec2 pos;
};

// Peers on a finite plane sharing one radio range. Peers are kept sorted by
// id so every index-based structure downstream is canonical.
struct Topology {
  std::vector<Peer> peers;
  double radio_range = 0.0;

  int size() const { return static_cast<int>(peers.size()); }

  int index_of(const std::string& id) const {
    for (int i = 0; i < size(); ++i)
      if (peers[i].id == id) return i;
    throw ValidationError("unknown peer id: " + id);
  }

  const std::string& id_of(int i) const { return peers[i].id; }
  Vec2 pos_of(int i) const { return peers[i].pos; }
};

// Undirected unit-disk neighbor graph: edge iff distance <= radio range.
struct AdjacencyGraph {
  int n = 0;
  std::vector<std::vector<int>> adj;   // sorted neighbor lists
  std::vector<Pair> edges;             // sorted, each stored once

  bool has_edge(int u, int v) const {
    if (u == v) return false;
    const auto& a = adj[u];
    return std::binary_search(a.begin(), a.end(), v);
  }

  int degree(int v) const { return static_cast<int>(adj[v].size()); }
};

inline Topology validate_topology(Topology t) {
  if (!(t.radio_range > 0.0) || !std::isfinite(t.radio_range))
    throw ValidationError("radio_range must be positive and finite");
  std::set<std::string> seen;
  for (const auto& p : t.peers) {
    if (p.id.empty()) throw ValidationError("peer id must be non-empty");
    if (!seen.insert(p.id).second)
      throw ValidationError("duplicate peer id: " + p.id);
    if (!std::isfinite(p.pos.x) || !std::isfinite(p.pos.y))
      throw ValidationError("non-finite coordinate for peer " + p.id);
  }
  std::sort(t.peers.begin(), t.peers.end(),
            [](const Peer& a, const Peer& b) { return a.id < b.id; });
  for (size_t i = 0; i < t.peers.size(); ++i)
    for (size_t j = i + 1; j < t.peers.size(); ++j)
      if (t.peers[i].pos == t.peers[j].pos)
        throw ValidationError("coincident peers: " + t.peers[i].id + ", " +
                              t.peers[j].id);
  return t;
}

inline Topology topology_from_json(const nlohmann::json& doc) {
  Topology t;
  try {
    t.radio_range = doc.at("radio_range").get<double>();
    for (const auto& p : doc.at("peers")) {
      t.peers.push_back({p.at("id").get<std::string>(),
                         {p.at("x").get<double>(), p.at("y").get<double>()}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topology document: ") + e.what());
  }
  return validate_topology(std::move(t));
}

inline Topology load_topology(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topology document: ") + e.what());
  }
  return topology_from_json(doc);
}

inline nlohmann::json topology_to_json(const Topology& t) {
  nlohmann::json peers = nlohmann::json::array();
  for (const auto& p : t.peers)
    peers.push_back({{"id", p.id}, {"x", p.pos.x}, {"y", p.pos.y}});
  return {{"radio_range", t.radio_range}, {"peers", peers}};
}

// Closed-disk neighbor rule: boundary distance counts as adjacent.
inline AdjacencyGraph build_graph(const Topology& t) {
  AdjacencyGraph g;
  g.n = t.size();
  g.adj.assign(g.n, {});
  for (int u = 0; u < g.n; ++u) {
    for (int v = u + 1; v < g.n; ++v) {
      if (distance(t.pos_of(u), t.pos_of(v)) <= t.radio_range) {
        g.adj[u].push_back(v);
        g.adj[v].push_back(u);
        g.edges.emplace_back(u, v);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

// True iff some third vertex is adjacent to both endpoints.
inline bool shared_triangle(const AdjacencyGraph& g, int u, int v) {
  if (!g.has_edge(u, v))
    throw NotAdjacent("shared_triangle: vertices are not adjacent");
  const auto& a = g.adj[u];
  const auto& b = g.adj[v];
  // both lists sorted; intersect
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j])
      ++i;
    else
      ++j;
  }
  return false;
}

}  // namespace dish
