#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "dish/sim/table.hpp"
#include "dish/sim/types.hpp"
#include "dish/topology.hpp"

namespace dish::sim {

// Discrete-event execution of the control-channel protocol.
//
// Handshake timeline, all on the control channel:
//
//   PRA(S→D) · PRB(D→S) · [cooperation window: ccap + t_inv] · CFA(S→D) ·
//   CFB(D→S) · both sides leave for the agreed data channel.
//
// Neighbours that decode a PRA or PRB check it against their usage tables
// and contend to transmit an INV during the cooperation window. The
// initiator treats any decoded INV — or any collision involving INV energy —
// as a veto and backs off. A missing PRB resolves the attempt at the PRB
// timeout; a missing CFB makes the initiator broadcast NCF so bystanders
// drop the table entry they recorded from the CFA.
//
// Virtual carrier sense: decoding a PRA or PRB reserves the channel at the
// hearer until the handshake's CFB would end. Nodes returning from a data
// channel or from sleep listen for one worst-case handshake remainder
// before contending, so they cannot stomp the tail of an exchange they
// missed the start of. Neither rule gags INV senders.
//
// Problem accounting is done against the engine's omniscient ground truth
// at the moment each handshake resolves, so mcc_created =
// mcc_prevented + mcc_realized holds exactly.
namespace detail_engine {

constexpr int kMaxAttempts = 6;

struct Packet {
  int dst = -1;
  int pref = 0;      // preferred data channel, 0 = none
  i64 data_us = 0;
  int attempts = 0;
};

struct NodeState {
  std::string id;
  Vec2 pos;
  bool altruist = false;
  std::vector<int> peer_dsts;  // traffic destinations (peers in range)

  bool asleep = false;
  bool forced_sleep = false;
  bool on_data = false;
  int data_channel = 0;
  int data_role = 0;  // 1 = initiator, 2 = responder
  i64 control_since = 0;
  i64 settle_until = 0;
  i64 nav_until = 0;
  i64 tx_busy_until = 0;
  i64 retry_not_before = 0;
  i64 last_inv_audible = -1;

  std::deque<Packet> queue;
  ChannelUsageTable table;
  int hs = -1;    // handshake this node is initiating
  int resp = -1;  // handshake this node is answering
  bool try_pending = false;

  i64 wake_mark = 0;
  i64 awake_us = 0;
  int frames_sent = 0;
};

struct Handshake {
  int id = -1;
  int s = -1;
  int d = -1;
  i64 pra_start = 0;
  i64 pra_end = 0;
  int channel = 0;      // proposed, then confirmed by PRB
  i64 exchange_us = 0;  // data + ack
  enum class Phase { WaitPrb, Coop, WaitCfb, Closed };
  Phase phase = Phase::WaitPrb;
  bool inv_heard = false;
  bool inv_clean = false;
  UsageEntry inv_usage;
  bool d_on_data_at_pra = false;
  bool pra_collided_at_d = false;
  bool cfb_received = false;
  bool d_committed = false;       // D transmitted CFB
  bool responder_alarmed = false;
};

struct Tx {
  int id = -1;
  int src = -1;
  i64 start = 0;
  i64 end = 0;
  Frame f;
};

struct PendingIntent {
  int node = -1;
  InvIntent intent;
  i64 window_start = 0;
  i64 draw = 0;
  i64 deadline = 0;
  bool cancelled = false;
};

struct Exchange {
  int hs = -1;
  int channel = 0;
  int a = -1;
  int b = -1;
  i64 start = 0;
  i64 end = 0;
};

enum EvKind {
  kScript,
  kNextArrival,
  kTryInit,
  kTxEnd,
  kPrbTimeout,
  kSendCfa,
  kCfbTimeout,
  kRespTimeout,
  kInvTry,
  kDataEnd,
  kWake,
};

struct Ev {
  i64 t = 0;
  std::uint64_t seq = 0;
  int kind = 0;
  int a = 0;
};

struct EvAfter {
  bool operator()(const Ev& x, const Ev& y) const {
    return std::tie(x.t, x.seq) > std::tie(y.t, y.seq);
  }
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    validate_sim_config(cfg_);
    scripted_ = cfg_.traffic.kind == Traffic::Kind::Scripted;
    build_nodes();
    if (scripted_) {
      validate_script();
      schedule_script();
    } else {
      schedule_poisson_start();
    }
  }

  SimResult run() {
    while (!q_.empty()) {
      Ev ev = q_.top();
      if (ev.t > cfg_.horizon_us) break;
      q_.pop();
      now_ = ev.t;
      dispatch(ev);
    }
    now_ = cfg_.horizon_us;
    finalize();
    return {std::move(metrics_), std::move(trace_)};
  }

 private:
  // -- setup ----------------------------------------------------------------

  void build_nodes() {
    const Topology& t = cfg_.topology;
    n_peers_ = t.size();
    const int total = n_peers_ + static_cast<int>(cfg_.altruists.size());
    nodes_.resize(total);
    for (int i = 0; i < n_peers_; ++i) {
      nodes_[i].id = t.id_of(i);
      nodes_[i].pos = t.pos_of(i);
    }
    for (std::size_t a = 0; a < cfg_.altruists.size(); ++a) {
      NodeState& x = nodes_[n_peers_ + static_cast<int>(a)];
      x.id = "@a" + std::to_string(a);
      x.pos = cfg_.altruists[a];
      x.altruist = true;
    }
    hears_.assign(total, std::vector<char>(total, 0));
    for (int i = 0; i < total; ++i)
      for (int j = 0; j < total; ++j)
        if (i != j &&
            distance(nodes_[i].pos, nodes_[j].pos) <= t.radio_range)
          hears_[i][j] = 1;
    for (int i = 0; i < n_peers_; ++i)
      for (int j = 0; j < n_peers_; ++j)
        if (i != j && hears_[i][j]) nodes_[i].peer_dsts.push_back(j);
    const bool auto_sleep =
        cfg_.mode == PsmMode::Psm && !scripted_;
    for (int i = 0; i < n_peers_; ++i) nodes_[i].asleep = auto_sleep;
  }

  void validate_script() {
    std::vector<std::vector<std::pair<i64, i64>>> sleeps(nodes_.size());
    for (const ScriptEvent& e : cfg_.traffic.events) {
      if (e.time < 0) throw ScriptError("directive time must be nonnegative");
      const int x = node_index(e.node);
      if (x >= n_peers_)
        throw ScriptError("directives may only address topology peers");
      if (e.kind == ScriptEvent::Kind::Arrival) {
        const int d = node_index(e.dst);
        if (d >= n_peers_)
          throw ScriptError("altruists carry no data traffic");
        if (d == x) throw ScriptError("arrival destination equals source");
        if (e.channel < 0 || e.channel > cfg_.data_channels)
          throw ScriptError("channel preference out of range");
        if (e.data_us < 0) throw ScriptError("data_us must be nonnegative");
      } else {
        if (e.until <= e.time)
          throw ScriptError("sleep interval must be nonempty");
        for (auto [s, u] : sleeps[x])
          if (e.time < u && s < e.until)
            throw ScriptError("overlapping sleep directives for " + e.node);
        sleeps[x].push_back({e.time, e.until});
      }
    }
  }

  int node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].id == id) return static_cast<int>(i);
    throw ScriptError("unknown node id: " + id);
  }

  void schedule_script() {
    for (std::size_t i = 0; i < cfg_.traffic.events.size(); ++i)
      push(cfg_.traffic.events[i].time, kScript, static_cast<int>(i));
  }

  void schedule_poisson_start() {
    for (int i = 0; i < n_peers_; ++i)
      if (!nodes_[i].peer_dsts.empty())
        push(exp_draw(), kNextArrival, i);
  }

  // -- randomness -----------------------------------------------------------

  i64 exp_draw() {
    const double u = (rng_() >> 11) * 0x1.0p-53;
    const double mean =
        static_cast<double>(cfg_.traffic.mean_interarrival_us);
    return std::max<i64>(1, static_cast<i64>(-mean * std::log1p(-u)));
  }

  i64 uniform_us(i64 hi) {  // inclusive
    return static_cast<i64>(rng_() % static_cast<std::uint64_t>(hi + 1));
  }

  i64 contend_slot(int node) {
    return scripted_ ? cfg_.timing.difs + node
                     : cfg_.timing.difs + uniform_us(cfg_.timing.difs);
  }

  i64 inv_draw(int node) {
    return scripted_ ? cfg_.timing.ccap / 2 + node
                     : uniform_us(cfg_.timing.ccap);
  }

  i64 retry_backoff(int node, int attempts) {
    const i64 span = (i64{1} << attempts) * cfg_.timing.difs;
    return scripted_ ? span + node : uniform_us(span);
  }

  // -- event plumbing -------------------------------------------------------

  void push(i64 t, int kind, int a) { q_.push({t, seq_++, kind, a}); }

  void dispatch(const Ev& ev) {
    switch (ev.kind) {
      case kScript: on_script(ev.a); break;
      case kNextArrival: on_next_arrival(ev.a); break;
      case kTryInit: on_try_init(ev.a); break;
      case kTxEnd: on_tx_end(ev.a); break;
      case kPrbTimeout: on_prb_timeout(ev.a); break;
      case kSendCfa: on_send_cfa(ev.a); break;
      case kCfbTimeout: on_cfb_timeout(ev.a); break;
      case kRespTimeout: on_resp_timeout(ev.a); break;
      case kInvTry: on_inv_try(ev.a); break;
      case kDataEnd: on_data_end(ev.a); break;
      case kWake: on_wake(ev.a); break;
      default: break;
    }
  }

  void trace(int node, const char* kind, nlohmann::json detail = {}) {
    if (!cfg_.record_trace) return;
    trace_.events.push_back(
        {now_, node < 0 ? std::string("-") : nodes_[node].id, kind,
         std::move(detail)});
  }

  // -- radio ----------------------------------------------------------------

  int begin_tx(int src, Frame f) {
    NodeState& x = nodes_[src];
    const i64 dur = cfg_.timing.frame_us(f.kind);
    const int id = next_tx_id_++;
    txs_.push_back({id, src, now_, now_ + dur, f});
    x.tx_busy_until = std::max(x.tx_busy_until, now_ + dur);
    x.frames_sent += 1;
    nlohmann::json detail{{"frame", to_string(f.kind)}};
    if (f.dst >= 0) detail["dst"] = nodes_[f.dst].id;
    if (f.channel > 0) detail["channel"] = f.channel;
    if (f.handshake >= 0) detail["hs"] = f.handshake;
    trace(src, "tx", std::move(detail));
    push(now_ + dur, kTxEnd, id);
    while (!txs_.empty() && txs_.front().end + 60000 < now_) {
      txs_.pop_front();
      ++tx_base_;
    }
    return id;
  }

  bool overlap(const Tx& a, const Tx& b) const {
    return a.start < b.end && b.start < a.end;
  }

  bool channel_busy_at(int node, i64 t) const {
    for (const Tx& tx : txs_)
      if (tx.src != node && tx.start <= t && t < tx.end &&
          hears_[node][tx.src])
        return true;
    return false;
  }

  i64 latest_audible_end(int node, i64 t) const {
    i64 end = t;
    for (const Tx& tx : txs_)
      if (tx.src != node && tx.start <= t && t < tx.end &&
          hears_[node][tx.src])
        end = std::max(end, tx.end);
    return end;
  }

  // Most recent audible transmission end at or before t (0 when none is
  // still remembered).
  i64 last_audible_end(int node, i64 t) const {
    i64 end = 0;
    for (const Tx& tx : txs_)
      if (tx.src != node && tx.end <= t && hears_[node][tx.src])
        end = std::max(end, tx.end);
    return end;
  }

  void on_tx_end(int tx_id) {
    const Tx tx = txs_[static_cast<std::size_t>(tx_id - tx_base_)];
    if (tx.f.kind == FrameKind::Pra && tx.f.handshake >= 0) {
      Handshake& hs = handshakes_[tx.f.handshake];
      hs.d_on_data_at_pra = nodes_[hs.d].on_data;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const int x = static_cast<int>(i);
      if (x == tx.src || !hears_[x][tx.src]) continue;
      deliver(x, tx);
    }
    if (tx.f.kind == FrameKind::Cfb && tx.f.handshake >= 0)
      responder_commit(tx);
  }

  void deliver(int x, const Tx& tx) {
    NodeState& n = nodes_[x];
    if (n.asleep || n.on_data || n.control_since > tx.start) return;
    bool self_tx = false;
    bool collided = false;
    bool inv_energy = tx.f.kind == FrameKind::Inv;
    for (const Tx& other : txs_) {
      if (other.id == tx.id || !overlap(other, tx)) continue;
      if (other.src == x) self_tx = true;
      if (other.src != x && other.src != tx.src && hears_[x][other.src]) {
        collided = true;
        if (other.f.kind == FrameKind::Inv) inv_energy = true;
      }
    }
    if (self_tx) return;  // half-duplex
    if (collided) {
      trace(x, "collision", {{"frame", to_string(tx.f.kind)},
                             {"src", nodes_[tx.src].id}});
      if (tx.f.kind == FrameKind::Pra && tx.f.handshake >= 0 &&
          tx.f.dst == x)
        handshakes_[tx.f.handshake].pra_collided_at_d = true;
      if (inv_energy) {
        n.last_inv_audible = now_;
        alarm_participant(x, false, {});
      }
      return;
    }
    receive(x, tx);
  }

  void alarm_participant(int x, bool clean, const UsageEntry& usage) {
    NodeState& n = nodes_[x];
    if (n.hs >= 0) {
      Handshake& hs = handshakes_[n.hs];
      if (hs.phase == Handshake::Phase::WaitPrb ||
          hs.phase == Handshake::Phase::Coop) {
        hs.inv_heard = true;
        if (clean) {
          hs.inv_clean = true;
          hs.inv_usage = usage;
        }
        trace(x, "inv_alarm", {{"hs", n.hs}, {"clean", clean}});
      }
    }
    if (n.resp >= 0) {
      Handshake& hs = handshakes_[n.resp];
      if (!hs.d_committed) {
        hs.responder_alarmed = true;
        trace(x, "inv_alarm", {{"hs", n.resp}, {"clean", clean}});
      }
    }
  }

  // -- reception ------------------------------------------------------------

  void receive(int x, const Tx& tx) {
    const Frame& f = tx.f;
    NodeState& n = nodes_[x];
    switch (f.kind) {
      case FrameKind::Pra: receive_pra(x, f); break;
      case FrameKind::Prb: receive_prb(x, f); break;
      case FrameKind::Cfa: receive_cfa(x, f); break;
      case FrameKind::Cfb: receive_cfb(x, f); break;
      case FrameKind::Inv:
        n.table.upsert(f.usage);
        n.last_inv_audible = now_;
        trace(x, "rx", {{"frame", "INV"}, {"channel", f.usage.channel}});
        alarm_participant(x, true, f.usage);
        for (PendingIntent& p : intents_)
          if (p.node == x && p.intent.handshake == f.handshake)
            p.cancelled = true;
        break;
      case FrameKind::Ncf:
        n.table.remove_pair(f.usage.sender, f.usage.receiver);
        trace(x, "rx", {{"frame", "NCF"}});
        break;
      default: break;
    }
  }

  void receive_pra(int x, const Frame& f) {
    NodeState& n = nodes_[x];
    const Timing& t = cfg_.timing;
    if (f.dst == x) {
      if (n.hs >= 0 || n.resp >= 0) {
        trace(x, "decline", {{"reason", "engaged"}, {"hs", f.handshake}});
        return;
      }
      const int c = confirm_channel(n.table, f);
      if (c == 0) {
        trace(x, "decline", {{"reason", "no_channel"}, {"hs", f.handshake}});
        return;
      }
      n.resp = f.handshake;
      Frame prb;
      prb.kind = FrameKind::Prb;
      prb.src = x;
      prb.dst = f.src;
      prb.channel = c;
      prb.exchange_us = f.exchange_us;
      prb.handshake = f.handshake;
      begin_tx(x, prb);
      push(now_ + t.t_prb + t.ccap + t.t_inv + t.t_cfa + t.difs,
           kRespTimeout, f.handshake);
      return;
    }
    n.nav_until = std::max(
        n.nav_until, now_ + t.t_prb + t.ccap + t.t_inv + t.t_cfa + t.t_cfb);
    consider_intent(x, f, /*pra=*/true);
  }

  void receive_prb(int x, const Frame& f) {
    NodeState& n = nodes_[x];
    const Timing& t = cfg_.timing;
    if (f.dst == x && n.hs == f.handshake) {
      Handshake& hs = handshakes_[f.handshake];
      if (hs.phase != Handshake::Phase::WaitPrb) return;
      hs.phase = Handshake::Phase::Coop;
      hs.channel = f.channel;
      // +1: an INV drawn at the very edge of the window ends exactly when
      // the CFA decision is due; give its delivery strict precedence.
      push(now_ + t.ccap + t.t_inv + 1, kSendCfa, f.handshake);
      return;
    }
    if (f.dst != x) {
      n.nav_until =
          std::max(n.nav_until, now_ + t.ccap + t.t_inv + t.t_cfa + t.t_cfb);
      consider_intent(x, f, /*pra=*/false);
    }
  }

  void receive_cfa(int x, const Frame& f) {
    NodeState& n = nodes_[x];
    const Timing& t = cfg_.timing;
    if (f.dst == x && n.resp == f.handshake) {
      Handshake& hs = handshakes_[f.handshake];
      if (hs.responder_alarmed) {
        trace(x, "abort_responding", {{"hs", f.handshake}});
        n.resp = -1;
        if (!n.queue.empty()) schedule_try(x, now_);
        return;
      }
      Frame cfb;
      cfb.kind = FrameKind::Cfb;
      cfb.src = x;
      cfb.dst = f.src;
      cfb.channel = f.channel;
      cfb.exchange_us = f.exchange_us;
      cfb.handshake = f.handshake;
      hs.d_committed = true;
      begin_tx(x, cfb);
      return;
    }
    if (f.dst != x) {
      n.table.upsert({f.channel, f.src, f.dst,
                      now_ + t.t_cfb + f.exchange_us});
      n.nav_until = std::max(n.nav_until, now_ + t.t_cfb);
      trace(x, "rx", {{"frame", "CFA"}, {"channel", f.channel}});
    }
  }

  void receive_cfb(int x, const Frame& f) {
    NodeState& n = nodes_[x];
    if (f.dst == x && n.hs == f.handshake) {
      Handshake& hs = handshakes_[f.handshake];
      if (hs.phase != Handshake::Phase::WaitCfb) return;
      hs.cfb_received = true;
      if (const Exchange* other = live_conflict(
              hs.channel, hs.s, hs.d, now_, now_ + hs.exchange_us, hs.id)) {
        record_mcc(hs, /*deaf=*/false, /*prevented=*/false, other);
        finish_handshake(hs, HandshakeOutcome::ChannelConflictRealized);
      } else {
        finish_handshake(hs, HandshakeOutcome::Success);
      }
      n.queue.pop_front();
      n.retry_not_before = 0;
      enter_data(x, hs.channel, hs.exchange_us, /*role=*/1);
      return;
    }
    if (f.dst != x) {
      n.table.upsert({f.channel, f.dst, f.src, now_ + f.exchange_us});
      trace(x, "rx", {{"frame", "CFB"}, {"channel", f.channel}});
    }
  }

  void responder_commit(const Tx& tx) {
    Handshake& hs = handshakes_[tx.f.handshake];
    NodeState& d = nodes_[tx.src];
    if (d.resp != hs.id) return;
    d.resp = -1;
    exchanges_.push_back({hs.id, tx.f.channel, hs.s, hs.d, now_,
                          now_ + tx.f.exchange_us});
    enter_data(tx.src, tx.f.channel, tx.f.exchange_us, /*role=*/2);
  }

  // -- channel selection ----------------------------------------------------

  int propose_channel(const ChannelUsageTable& table, int pref) const {
    if (pref >= 1 && pref <= cfg_.data_channels &&
        table.channel_free(pref, now_))
      return pref;
    return table.lowest_free_channel(cfg_.data_channels, now_);
  }

  std::uint32_t free_mask(const ChannelUsageTable& table) const {
    std::uint32_t m = 0;
    for (int c = 1; c <= cfg_.data_channels; ++c)
      if (table.channel_free(c, now_)) m |= 1u << c;
    return m;
  }

  // The responder honours an admissible proposal, then falls back to the
  // lowest channel free on both sides, then declines.
  int confirm_channel(const ChannelUsageTable& table, const Frame& pra) const {
    if (pra.channel >= 1 && table.channel_free(pra.channel, now_))
      return pra.channel;
    for (int c = 1; c <= cfg_.data_channels; ++c)
      if ((pra.free_mask >> c & 1) && table.channel_free(c, now_)) return c;
    return 0;
  }

  // -- cooperation ----------------------------------------------------------

  void consider_intent(int x, const Frame& f, bool pra) {
    if (f.src == x || f.dst == x) return;
    NodeState& n = nodes_[x];
    auto maybe = detect_mcc(n.table, f, now_);
    nlohmann::json rx{{"frame", pra ? "PRA" : "PRB"}};
    if (f.channel > 0) rx["channel"] = f.channel;
    trace(x, "rx", std::move(rx));
    if (!maybe) return;
    PendingIntent p;
    p.node = x;
    p.intent = *maybe;
    p.window_start = now_;
    p.draw = inv_draw(x);
    p.deadline = now_ + (pra ? cfg_.timing.t_prb : 0) + cfg_.timing.ccap;
    const int idx = static_cast<int>(intents_.size());
    intents_.push_back(p);
    trace(x, "detect",
          {{"hs", f.handshake},
           {"kind", maybe->channel_conflict ? "channel_conflict"
                                            : "deaf_terminal"}});
    push(now_ + p.draw, kInvTry, idx);
  }

  void on_inv_try(int idx) {
    PendingIntent& p = intents_[static_cast<std::size_t>(idx)];
    if (p.cancelled) return;
    NodeState& n = nodes_[p.node];
    if (n.asleep || n.on_data) return;
    if (n.last_inv_audible >= p.window_start) return;  // alarm already out
    if (now_ > p.deadline) return;
    if (n.tx_busy_until > now_) {
      push(n.tx_busy_until + p.draw, kInvTry, idx);
      return;
    }
    if (channel_busy_at(p.node, now_)) {
      const i64 free_at = latest_audible_end(p.node, now_);
      push(free_at + p.draw, kInvTry, idx);
      return;
    }
    Frame inv;
    inv.kind = FrameKind::Inv;
    inv.src = p.node;
    inv.dst = -1;
    inv.usage = p.intent.cited;
    inv.handshake = p.intent.handshake;
    begin_tx(p.node, inv);
    metrics_.inv_sent += 1;
    for (PendingIntent& other : intents_)
      if (other.node == p.node &&
          other.intent.handshake == p.intent.handshake)
        other.cancelled = true;
  }

  // -- initiation -----------------------------------------------------------

  void schedule_try(int x, i64 at) {
    NodeState& n = nodes_[x];
    if (n.try_pending) return;
    n.try_pending = true;
    push(std::max(at, now_), kTryInit, x);
  }

  void on_try_init(int x) {
    NodeState& n = nodes_[x];
    n.try_pending = false;
    if (n.asleep || n.on_data || n.hs >= 0 || n.resp >= 0) return;
    if (n.queue.empty()) {
      maybe_sleep(x);
      return;
    }
    const i64 gate = std::max({n.settle_until, n.nav_until,
                               n.retry_not_before, n.tx_busy_until});
    if (gate > now_) {
      schedule_try(x, gate);
      return;
    }
    if (channel_busy_at(x, now_)) {
      schedule_try(x, latest_audible_end(x, now_) + contend_slot(x));
      return;
    }
    // Carrier sensing demands a full DIFS of observed idle, not merely an
    // idle instant: a station whose deferral ends exactly as a frame does
    // must not stomp the zero-turnaround response that follows it.
    const i64 quiet_since = last_audible_end(x, now_);
    if (now_ < quiet_since + cfg_.timing.difs) {
      schedule_try(x, quiet_since + contend_slot(x));
      return;
    }
    Packet& pkt = n.queue.front();
    if (const UsageEntry* e = n.table.find_engaged(pkt.dst, now_)) {
      trace(x, "defer", {{"reason", "destination_engaged"},
                         {"until", e->busy_until}});
      schedule_try(x, e->busy_until + contend_slot(x));
      return;
    }
    const int c = propose_channel(n.table, pkt.pref);
    if (c == 0) {
      i64 earliest = now_ + cfg_.timing.t_data;
      for (const UsageEntry& e : n.table.entries())
        if (e.busy_until > now_) earliest = std::min(earliest, e.busy_until);
      trace(x, "defer", {{"reason", "no_free_channel"}});
      schedule_try(x, earliest + contend_slot(x));
      return;
    }
    const int id = static_cast<int>(handshakes_.size());
    Handshake hs;
    hs.id = id;
    hs.s = x;
    hs.d = pkt.dst;
    hs.pra_start = now_;
    hs.pra_end = now_ + cfg_.timing.t_pra;
    hs.channel = c;
    hs.exchange_us = pkt.data_us + cfg_.timing.t_ack;
    handshakes_.push_back(hs);
    n.hs = id;
    open_handshakes_ += 1;
    Frame pra;
    pra.kind = FrameKind::Pra;
    pra.src = x;
    pra.dst = pkt.dst;
    pra.channel = c;
    pra.exchange_us = hs.exchange_us;
    pra.free_mask = free_mask(n.table);
    pra.handshake = id;
    begin_tx(x, pra);
    const Timing& t = cfg_.timing;
    push(now_ + t.t_pra + t.t_prb + t.ccap + t.t_inv + 1, kPrbTimeout, id);
  }

  // -- handshake resolution ---------------------------------------------------

  void on_prb_timeout(int id) {
    Handshake& hs = handshakes_[id];
    if (hs.phase != Handshake::Phase::WaitPrb) return;
    NodeState& s = nodes_[hs.s];
    if (hs.inv_heard) {
      if (hs.d_on_data_at_pra) {
        record_mcc(hs, /*deaf=*/true, /*prevented=*/true, nullptr);
      } else if (const Exchange* other =
                     live_conflict(hs.channel, hs.s, hs.d, now_,
                                   now_ + hs.exchange_us, hs.id)) {
        record_mcc(hs, /*deaf=*/false, /*prevented=*/true, other);
      }
      finish_handshake(hs, HandshakeOutcome::PreventedByInv);
      retry_packet(hs, inv_backoff_floor(hs));
    } else if (hs.d_on_data_at_pra) {
      record_mcc(hs, /*deaf=*/true, /*prevented=*/false, nullptr);
      finish_handshake(hs, HandshakeOutcome::DeafTerminalRealized);
      retry_packet(hs, now_);
    } else if (hs.pra_collided_at_d) {
      finish_handshake(hs, HandshakeOutcome::ControlCollision);
      retry_packet(hs, now_);
    } else {
      finish_handshake(hs, HandshakeOutcome::NoResponse);
      retry_packet(hs, now_);
    }
    (void)s;
  }

  void on_send_cfa(int id) {
    Handshake& hs = handshakes_[id];
    if (hs.phase != Handshake::Phase::Coop) return;
    NodeState& s = nodes_[hs.s];
    if (hs.inv_heard) {
      if (const Exchange* other = live_conflict(
              hs.channel, hs.s, hs.d, now_, now_ + hs.exchange_us, hs.id)) {
        record_mcc(hs, /*deaf=*/false, /*prevented=*/true, other);
      } else if (hs.d_on_data_at_pra) {
        record_mcc(hs, /*deaf=*/true, /*prevented=*/true, nullptr);
      }
      finish_handshake(hs, HandshakeOutcome::PreventedByInv);
      retry_packet(hs, inv_backoff_floor(hs));
      return;
    }
    if (s.tx_busy_until > now_ || channel_busy_at(hs.s, now_)) {
      // The window was stomped; treat like an aborted attempt.
      finish_handshake(hs, HandshakeOutcome::ControlCollision);
      retry_packet(hs, now_);
      return;
    }
    Frame cfa;
    cfa.kind = FrameKind::Cfa;
    cfa.src = hs.s;
    cfa.dst = hs.d;
    cfa.channel = hs.channel;
    cfa.exchange_us = hs.exchange_us;
    cfa.handshake = id;
    begin_tx(hs.s, cfa);
    hs.phase = Handshake::Phase::WaitCfb;
    const Timing& t = cfg_.timing;
    push(now_ + t.t_cfa + t.t_cfb + t.difs, kCfbTimeout, id);
  }

  void on_cfb_timeout(int id) {
    Handshake& hs = handshakes_[id];
    if (hs.phase != Handshake::Phase::WaitCfb || hs.cfb_received) return;
    Frame ncf;
    ncf.kind = FrameKind::Ncf;
    ncf.src = hs.s;
    ncf.dst = -1;
    ncf.usage = {hs.channel, hs.s, hs.d, now_ + hs.exchange_us};
    ncf.handshake = id;
    begin_tx(hs.s, ncf);
    if (hs.responder_alarmed) {
      if (const Exchange* other = live_conflict(
              hs.channel, hs.s, hs.d, now_, now_ + hs.exchange_us, hs.id))
        record_mcc(hs, /*deaf=*/false, /*prevented=*/true, other);
    }
    finish_handshake(hs, HandshakeOutcome::AbortedNcf);
    retry_packet(hs, now_);
  }

  void on_resp_timeout(int id) {
    Handshake& hs = handshakes_[id];
    NodeState& d = nodes_[hs.d];
    if (d.resp == id && !hs.d_committed) {
      d.resp = -1;
      if (!d.queue.empty()) schedule_try(hs.d, now_);
      maybe_sleep(hs.d);
    }
  }

  i64 inv_backoff_floor(const Handshake& hs) const {
    if (hs.inv_clean) return hs.inv_usage.busy_until;
    return now_ + cfg_.timing.t_data + cfg_.timing.t_ack;
  }

  void finish_handshake(Handshake& hs, HandshakeOutcome outcome) {
    hs.phase = Handshake::Phase::Closed;
    open_handshakes_ -= 1;
    metrics_.initiated += 1;
    metrics_.outcomes[static_cast<int>(outcome)] += 1;
    nodes_[hs.s].hs = -1;
    trace(hs.s, "outcome",
          {{"hs", hs.id},
           {"dst", nodes_[hs.d].id},
           {"outcome", to_string(outcome)}});
  }

  void retry_packet(const Handshake& hs, i64 floor) {
    NodeState& s = nodes_[hs.s];
    if (s.queue.empty()) return;
    Packet& pkt = s.queue.front();
    pkt.attempts += 1;
    if (pkt.attempts > kMaxAttempts) {
      s.queue.pop_front();
      s.retry_not_before = 0;
      metrics_.packets_dropped += 1;
      trace(hs.s, "drop", {{"dst", nodes_[hs.d].id}});
      if (!s.queue.empty())
        schedule_try(hs.s, now_ + contend_slot(hs.s));
      else
        maybe_sleep(hs.s);
      return;
    }
    s.retry_not_before =
        std::max(floor, now_ + retry_backoff(hs.s, pkt.attempts));
    schedule_try(hs.s, s.retry_not_before);
  }

  // -- data phase -------------------------------------------------------------

  void enter_data(int x, int channel, i64 dur, int role) {
    NodeState& n = nodes_[x];
    n.on_data = true;
    n.data_channel = channel;
    n.data_role = role;
    trace(x, "data_start", {{"channel", channel}, {"role", role}});
    if (role == 1) n.frames_sent += 1;  // DATA
    push(now_ + dur, kDataEnd, x);
  }

  void on_data_end(int x) {
    NodeState& n = nodes_[x];
    n.on_data = false;
    n.data_channel = 0;
    n.control_since = now_;
    n.settle_until = now_ + cfg_.timing.settle_us();
    if (n.data_role == 2) n.frames_sent += 1;  // ACK
    n.data_role = 0;
    trace(x, "data_end");
    if (!n.queue.empty())
      schedule_try(x, n.settle_until);
    else
      maybe_sleep(x);
  }

  // -- traffic and power ------------------------------------------------------

  void arrival(int x, Packet pkt) {
    NodeState& n = nodes_[x];
    n.queue.push_back(pkt);
    trace(x, "arrival", {{"dst", nodes_[pkt.dst].id}});
    if (n.asleep && !n.forced_sleep) wake(x);
    if (!n.asleep && !n.on_data && n.hs < 0 && n.resp < 0)
      schedule_try(x, now_ + cfg_.timing.difs +
                          (scripted_ ? 0 : uniform_us(cfg_.timing.difs)));
  }

  void on_script(int idx) {
    const ScriptEvent& e = cfg_.traffic.events[static_cast<std::size_t>(idx)];
    const int x = node_index(e.node);
    if (e.kind == ScriptEvent::Kind::Arrival) {
      Packet pkt;
      pkt.dst = node_index(e.dst);
      pkt.pref = e.channel;
      pkt.data_us = e.data_us > 0 ? e.data_us : cfg_.timing.t_data;
      arrival(x, pkt);
    } else {
      NodeState& n = nodes_[x];
      if (n.hs >= 0 || n.resp >= 0 || n.on_data)
        throw ScriptError("sleep directive during an active exchange at " +
                          e.node);
      if (n.asleep)
        throw ScriptError("sleep directive while already asleep at " +
                          e.node);
      go_sleep(x, /*forced=*/true);
      push(e.until, kWake, x);
    }
  }

  void on_next_arrival(int x) {
    NodeState& n = nodes_[x];
    Packet pkt;
    pkt.dst = n.peer_dsts[rng_() % n.peer_dsts.size()];
    pkt.data_us = cfg_.timing.t_data;
    arrival(x, pkt);
    push(now_ + exp_draw(), kNextArrival, x);
  }

  void on_wake(int x) {
    NodeState& n = nodes_[x];
    n.forced_sleep = false;
    if (n.asleep) wake(x);
    if (!n.queue.empty()) schedule_try(x, now_);
    else maybe_sleep(x);
  }

  void wake(int x) {
    NodeState& n = nodes_[x];
    n.asleep = false;
    n.wake_mark = now_;
    n.control_since = now_;
    n.settle_until = now_ + cfg_.timing.settle_us();
    trace(x, "wake");
  }

  void go_sleep(int x, bool forced) {
    NodeState& n = nodes_[x];
    n.awake_us += now_ - n.wake_mark;
    n.asleep = true;
    n.forced_sleep = forced;
    trace(x, "sleep");
  }

  void maybe_sleep(int x) {
    NodeState& n = nodes_[x];
    if (cfg_.mode != PsmMode::Psm || scripted_ || n.altruist) return;
    if (n.asleep || n.on_data || n.hs >= 0 || n.resp >= 0) return;
    if (!n.queue.empty()) return;
    go_sleep(x, /*forced=*/false);
  }

  // -- ground truth -----------------------------------------------------------

  const Exchange* live_conflict(int channel, int a, int b, i64 from, i64 to,
                                int exclude_hs) {
    std::erase_if(exchanges_,
                  [&](const Exchange& e) { return e.end + 60000 < now_; });
    for (const Exchange& e : exchanges_) {
      if (e.hs == exclude_hs || e.channel != channel) continue;
      if (e.end <= from || e.start >= to) continue;
      if (hears_[a][e.a] || hears_[a][e.b] || hears_[b][e.a] ||
          hears_[b][e.b])
        return &e;
    }
    return nullptr;
  }

  void record_mcc(const Handshake& hs, bool deaf, bool prevented,
                  const Exchange* other) {
    metrics_.mcc_created += 1;
    (deaf ? metrics_.mcc_created_deaf : metrics_.mcc_created_conflict) += 1;
    (prevented ? metrics_.mcc_prevented : metrics_.mcc_realized) += 1;
    MccRecord r;
    r.deaf = deaf;
    r.prevented = prevented;
    r.src = hs.s;
    r.dst = hs.d;
    if (other) {
      r.other_a = other->a;
      r.other_b = other->b;
    }
    metrics_.mcc_records.push_back(r);
  }

  // -- finalization -----------------------------------------------------------

  void finalize() {
    for (NodeState& n : nodes_) {
      if (!n.asleep) n.awake_us += now_ - n.wake_mark;
    }
    metrics_.seed = cfg_.seed;
    metrics_.in_flight_at_end = open_handshakes_;
    for (const NodeState& n : nodes_) {
      NodeStats s;
      s.id = n.id;
      s.altruist = n.altruist;
      s.awake_fraction =
          static_cast<double>(n.awake_us) / static_cast<double>(now_);
      s.frames_sent = n.frames_sent;
      metrics_.nodes.push_back(s);
    }
  }

  SimConfig cfg_;
  std::mt19937_64 rng_;
  bool scripted_ = false;
  int n_peers_ = 0;

  std::vector<NodeState> nodes_;
  std::vector<std::vector<char>> hears_;
  std::vector<Handshake> handshakes_;
  std::vector<PendingIntent> intents_;
  std::vector<Exchange> exchanges_;
  std::deque<Tx> txs_;
  int tx_base_ = 0;
  int next_tx_id_ = 0;
  int open_handshakes_ = 0;

  std::priority_queue<Ev, std::vector<Ev>, EvAfter> q_;
  std::uint64_t seq_ = 0;
  i64 now_ = 0;

  SimMetrics metrics_;
  Trace trace_;
};

}  // namespace detail_engine

inline SimResult run_simulation(const SimConfig& cfg) {
  detail_engine::Engine engine(cfg);
  return engine.run();
}

// Deterministic replay of a scripted scenario: no random draws are consumed,
// so the trace is a pure function of the configuration.
inline SimResult scripted_scenario(const SimConfig& cfg) {
  if (cfg.traffic.kind != Traffic::Kind::Scripted)
    throw ScriptError("scripted_scenario requires scripted traffic");
  return run_simulation(cfg);
}

}  // namespace dish::sim
