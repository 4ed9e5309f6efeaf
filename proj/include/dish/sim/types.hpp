#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dish/classify.hpp"
#include "dish/core.hpp"
#include "dish/topology.hpp"
#include "json.hpp"

namespace dish::sim {

using i64 = std::int64_t;

// ---------------------------------------------------------------------------
// Frames

enum class FrameKind { Pra, Prb, Cfa, Cfb, Inv, Ncf, Data, Ack };

inline std::string to_string(FrameKind k) {
  switch (k) {
    case FrameKind::Pra: return "PRA";
    case FrameKind::Prb: return "PRB";
    case FrameKind::Cfa: return "CFA";
    case FrameKind::Cfb: return "CFB";
    case FrameKind::Inv: return "INV";
    case FrameKind::Ncf: return "NCF";
    case FrameKind::Data: return "DATA";
    default: return "ACK";
  }
}

// One cached observation of an established data exchange.
struct UsageEntry {
  int channel = 0;
  int sender = -1;
  int receiver = -1;
  i64 busy_until = 0;
};

struct Frame {
  FrameKind kind = FrameKind::Pra;
  int src = -1;
  int dst = -1;  // -1 = broadcast (INV, NCF)
  int channel = 0;       // proposed/confirmed data channel
  i64 exchange_us = 0;   // announced data+ack duration (PRA..CFB)
  std::uint32_t free_mask = 0;  // PRA: sender's free channels, bit c = ch c
  UsageEntry usage;      // INV: the conflicting usage; NCF: the pair to drop
  int handshake = -1;
};

// ---------------------------------------------------------------------------
// Outcomes
//
// The protocol-level fates of one initiated handshake. NoResponse covers a
// target that is asleep, engaged in another handshake, or declining for
// lack of channels — silences that are not themselves coordination problems.

enum class HandshakeOutcome {
  Success,
  PreventedByInv,
  AbortedNcf,
  ChannelConflictRealized,
  DeafTerminalRealized,
  ControlCollision,
  NoResponse,
};

inline constexpr int kOutcomeCount = 7;

inline std::string to_string(HandshakeOutcome o) {
  switch (o) {
    case HandshakeOutcome::Success: return "success";
    case HandshakeOutcome::PreventedByInv: return "prevented_by_inv";
    case HandshakeOutcome::AbortedNcf: return "aborted_ncf";
    case HandshakeOutcome::ChannelConflictRealized:
      return "channel_conflict_realized";
    case HandshakeOutcome::DeafTerminalRealized:
      return "deaf_terminal_realized";
    case HandshakeOutcome::ControlCollision: return "control_collision";
    default: return "no_response";
  }
}

// ---------------------------------------------------------------------------
// Configuration

struct Timing {
  i64 difs = 50;
  i64 ccap = 100;
  i64 t_pra = 200;
  i64 t_prb = 200;
  i64 t_cfa = 200;
  i64 t_cfb = 200;
  i64 t_inv = 200;
  i64 t_ncf = 200;
  i64 t_data = 5000;
  i64 t_ack = 200;

  i64 frame_us(FrameKind k) const {
    switch (k) {
      case FrameKind::Pra: return t_pra;
      case FrameKind::Prb: return t_prb;
      case FrameKind::Cfa: return t_cfa;
      case FrameKind::Cfb: return t_cfb;
      case FrameKind::Inv: return t_inv;
      case FrameKind::Ncf: return t_ncf;
      case FrameKind::Data: return t_data;
      default: return t_ack;
    }
  }

  // Worst-case remainder of a handshake whose PRA one just missed; a node
  // back from data or sleep listens this long before contending.
  i64 settle_us() const { return t_prb + ccap + t_inv + t_cfa + t_cfb; }
};

struct ScriptEvent {
  enum class Kind { Arrival, Sleep };
  Kind kind = Kind::Arrival;
  i64 time = 0;
  std::string node;
  std::string dst;      // arrival
  int channel = 0;      // arrival: preferred data channel, 0 = none
  i64 data_us = 0;      // arrival: data duration override, 0 = default
  i64 until = 0;        // sleep: forced-sleep end
};

struct Traffic {
  enum class Kind { Poisson, Scripted };
  Kind kind = Kind::Poisson;
  i64 mean_interarrival_us = 20000;  // per peer
  std::vector<ScriptEvent> events;
};

struct SimConfig {
  Topology topology;
  std::vector<Vec2> altruists;
  int data_channels = 3;
  Timing timing;
  PsmMode mode = PsmMode::NoPsm;
  Traffic traffic;
  std::uint64_t seed = 0;
  i64 horizon_us = 1000000;
  bool record_trace = true;
};

// ---------------------------------------------------------------------------
// Results

struct TraceEvent {
  i64 t = 0;
  std::string node;
  std::string kind;
  nlohmann::json detail;
};

struct Trace {
  std::vector<TraceEvent> events;

  std::string to_jsonl() const {
    std::ostringstream out;
    for (const auto& e : events) {
      nlohmann::json line{{"t", e.t}, {"node", e.node}, {"ev", e.kind}};
      if (!e.detail.is_null())
        for (auto& [k, v] : e.detail.items()) line[k] = v;
      out << line.dump() << "\n";
    }
    return out.str();
  }
};

struct NodeStats {
  std::string id;
  bool altruist = false;
  double awake_fraction = 0.0;
  int frames_sent = 0;
};

// One entry per created coordination problem, kept for attribution: which
// handshake created it and, for conflicts, which exchange it clashed with.
struct MccRecord {
  bool deaf = false;       // deaf terminal; false = channel conflict
  bool prevented = false;  // an INV stopped it before the data phase
  int src = -1;            // creating handshake's initiator (node index)
  int dst = -1;            // creating handshake's target
  int other_a = -1;        // clashing exchange's pair, conflicts only
  int other_b = -1;
};

struct SimMetrics {
  std::uint64_t seed = 0;
  int initiated = 0;  // handshakes that reached a resolution in the horizon
  std::array<int, kOutcomeCount> outcomes{};
  int mcc_created = 0;
  int mcc_created_conflict = 0;
  int mcc_created_deaf = 0;
  int mcc_prevented = 0;
  int mcc_realized = 0;
  int inv_sent = 0;
  int packets_dropped = 0;
  int in_flight_at_end = 0;
  std::vector<MccRecord> mcc_records;
  std::vector<NodeStats> nodes;

  int count(HandshakeOutcome o) const {
    return outcomes[static_cast<int>(o)];
  }

  double mean_peer_awake() const {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : nodes)
      if (!s.altruist) {
        sum += s.awake_fraction;
        ++n;
      }
    return n ? sum / n : 0.0;
  }
};

inline std::string metrics_csv_header() {
  return "seed,initiated,success,prevented_by_inv,aborted_ncf,"
         "channel_conflict_realized,deaf_terminal_realized,control_collision,"
         "no_response,mcc_created,mcc_created_conflict,mcc_created_deaf,"
         "mcc_prevented,mcc_realized,inv_sent,packets_dropped,"
         "mean_peer_awake_fraction";
}

inline std::string metrics_csv_row(const SimMetrics& m) {
  std::ostringstream out;
  out << m.seed << ',' << m.initiated;
  for (int i = 0; i < kOutcomeCount; ++i) out << ',' << m.outcomes[i];
  out << ',' << m.mcc_created << ',' << m.mcc_created_conflict << ','
      << m.mcc_created_deaf << ',' << m.mcc_prevented << ',' << m.mcc_realized
      << ',' << m.inv_sent << ',' << m.packets_dropped << ',';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", m.mean_peer_awake());
  out << buf;
  return out.str();
}

struct SimResult {
  SimMetrics metrics;
  Trace trace;
};

// ---------------------------------------------------------------------------
// Config JSON: the topology document plus a "sim" block.

inline SimConfig sim_config_from_json(const nlohmann::json& doc) {
  SimConfig cfg;
  cfg.topology = topology_from_json(doc);
  if (!doc.contains("sim")) return cfg;
  const auto& s = doc.at("sim");
  try {
    if (s.contains("mode"))
      cfg.mode = psm_mode_from_string(s.at("mode").get<std::string>());
    if (s.contains("data_channels"))
      cfg.data_channels = s.at("data_channels").get<int>();
    if (s.contains("seed")) cfg.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("horizon_us"))
      cfg.horizon_us = s.at("horizon_us").get<i64>();
    if (s.contains("record_trace"))
      cfg.record_trace = s.at("record_trace").get<bool>();
    if (s.contains("timing")) {
      const auto& t = s.at("timing");
      auto get = [&](const char* key, i64& field) {
        if (t.contains(key)) field = t.at(key).get<i64>();
      };
      get("difs", cfg.timing.difs);
      get("ccap", cfg.timing.ccap);
      get("t_pra", cfg.timing.t_pra);
      get("t_prb", cfg.timing.t_prb);
      get("t_cfa", cfg.timing.t_cfa);
      get("t_cfb", cfg.timing.t_cfb);
      get("t_inv", cfg.timing.t_inv);
      get("t_ncf", cfg.timing.t_ncf);
      get("t_data", cfg.timing.t_data);
      get("t_ack", cfg.timing.t_ack);
    }
    if (s.contains("altruists"))
      for (const auto& a : s.at("altruists"))
        cfg.altruists.push_back(
            {a.at("x").get<double>(), a.at("y").get<double>()});
    if (s.contains("traffic")) {
      const auto& tr = s.at("traffic");
      const std::string kind = tr.at("kind").get<std::string>();
      if (kind == "poisson") {
        cfg.traffic.kind = Traffic::Kind::Poisson;
        if (tr.contains("mean_interarrival_us"))
          cfg.traffic.mean_interarrival_us =
              tr.at("mean_interarrival_us").get<i64>();
      } else if (kind == "scripted") {
        cfg.traffic.kind = Traffic::Kind::Scripted;
        for (const auto& e : tr.at("events")) {
          ScriptEvent ev;
          const std::string action = e.at("action").get<std::string>();
          ev.time = e.at("time").get<i64>();
          ev.node = e.at("node").get<std::string>();
          if (action == "arrival") {
            ev.kind = ScriptEvent::Kind::Arrival;
            ev.dst = e.at("dst").get<std::string>();
            if (e.contains("channel")) ev.channel = e.at("channel").get<int>();
            if (e.contains("data_us")) ev.data_us = e.at("data_us").get<i64>();
          } else if (action == "sleep") {
            ev.kind = ScriptEvent::Kind::Sleep;
            ev.until = e.at("until").get<i64>();
          } else {
            throw ConfigError("unknown script action: " + action);
          }
          cfg.traffic.events.push_back(std::move(ev));
        }
      } else {
        throw ConfigError("unknown traffic kind: " + kind);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sim block: ") + e.what());
  }
  return cfg;
}

inline SimConfig load_sim_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config document: ") + e.what());
  }
  return sim_config_from_json(doc);
}

inline void validate_sim_config(const SimConfig& cfg) {
  if (cfg.data_channels < 1)
    throw ConfigError("data_channels must be at least 1");
  if (cfg.horizon_us <= 0) throw ConfigError("horizon_us must be positive");
  const Timing& t = cfg.timing;
  for (i64 v : {t.difs, t.ccap, t.t_pra, t.t_prb, t.t_cfa, t.t_cfb, t.t_inv,
                t.t_ncf, t.t_data, t.t_ack})
    if (v <= 0) throw ConfigError("all timing durations must be positive");
  if (cfg.traffic.kind == Traffic::Kind::Poisson &&
      cfg.traffic.mean_interarrival_us <= 0)
    throw ConfigError("mean_interarrival_us must be positive");
  for (const Vec2& a : cfg.altruists)
    if (!std::isfinite(a.x) || !std::isfinite(a.y))
      throw ConfigError("altruist coordinates must be finite");
}

}  // namespace dish::sim
