#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "dish/sim/types.hpp"

namespace dish::sim {

// Per-node cache of overheard channel commitments. Entries are added only
// from frames the node actually decoded while awake on the control channel
// (CFA, CFB, INV payloads) and lapse at busy_until.
class ChannelUsageTable {
 public:
  void upsert(const UsageEntry& e) {
    for (UsageEntry& cur : entries_)
      if (cur.sender == e.sender && cur.receiver == e.receiver) {
        cur = e;
        return;
      }
    entries_.push_back(e);
  }

  void remove_pair(int sender, int receiver) {
    std::erase_if(entries_, [&](const UsageEntry& e) {
      return e.sender == sender && e.receiver == receiver;
    });
  }

  void expire(i64 now) {
    std::erase_if(entries_,
                  [&](const UsageEntry& e) { return e.busy_until <= now; });
  }

  // Live entry occupying the given data channel, if any.
  const UsageEntry* find_channel(int channel, i64 now) const {
    for (const UsageEntry& e : entries_)
      if (e.channel == channel && e.busy_until > now) return &e;
    return nullptr;
  }

  // Live entry in which the given node participates, if any.
  const UsageEntry* find_engaged(int node, i64 now) const {
    for (const UsageEntry& e : entries_)
      if (e.busy_until > now && (e.sender == node || e.receiver == node))
        return &e;
    return nullptr;
  }

  bool channel_free(int channel, i64 now) const {
    return find_channel(channel, now) == nullptr;
  }

  // Lowest-numbered free data channel in 1..data_channels, or 0 if none.
  int lowest_free_channel(int data_channels, i64 now) const {
    for (int c = 1; c <= data_channels; ++c)
      if (channel_free(c, now)) return c;
    return 0;
  }

  const std::vector<UsageEntry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::vector<UsageEntry> entries_;
};

// A neighbour's decision to raise the alarm about an announced handshake.
struct InvIntent {
  UsageEntry cited;            // the table entry contradicting the handshake
  bool channel_conflict = false;
  bool deaf_terminal = false;
  int handshake = -1;          // the handshake being objected to
};

// Examines an overheard PRA or PRB against the observer's table. Returns an
// intent when the announcement proposes a channel the observer knows to be
// occupied, or addresses a node the observer knows to be away on data.
inline std::optional<InvIntent> detect_mcc(const ChannelUsageTable& table,
                                           const Frame& frame, i64 now) {
  if (frame.kind != FrameKind::Pra && frame.kind != FrameKind::Prb)
    return std::nullopt;
  if (const UsageEntry* e = table.find_channel(frame.channel, now)) {
    InvIntent intent;
    intent.cited = *e;
    intent.channel_conflict = true;
    intent.handshake = frame.handshake;
    return intent;
  }
  if (frame.dst >= 0)
    if (const UsageEntry* e = table.find_engaged(frame.dst, now)) {
      InvIntent intent;
      intent.cited = *e;
      intent.deaf_terminal = true;
      intent.handshake = frame.handshake;
      return intent;
    }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reference model of one INV contention window.
//
// Every holder of an intent draws a delay uniformly from [0, ccap] and
// transmits unless it heard an earlier INV start first. Holders outside each
// other's carrier-sense range transmit independently; where their frames
// overlap at a listener the payloads are lost but the alarm still registers.

struct ContendingIntent {
  int node = -1;
  InvIntent intent;
};

struct InvDelivery {
  int node = -1;       // transmitting node
  i64 start = 0;       // transmission start, relative to window open
  bool suppressed = false;
};

struct ContentionResult {
  std::vector<InvDelivery> deliveries;  // one per intent, input order

  // Transmissions overlapping in time (alarm still raised at any listener
  // within range of both).
  bool overlapping(i64 t_inv) const {
    std::vector<i64> starts;
    for (const auto& d : deliveries)
      if (!d.suppressed) starts.push_back(d.start);
    std::sort(starts.begin(), starts.end());
    for (std::size_t i = 1; i < starts.size(); ++i)
      if (starts[i] < starts[i - 1] + t_inv) return true;
    return false;
  }
};

template <typename AudibleFn>
ContentionResult ccap_contention(const std::vector<ContendingIntent>& intents,
                                 std::mt19937_64& rng, i64 ccap,
                                 AudibleFn audible) {
  ContentionResult result;
  result.deliveries.resize(intents.size());
  std::vector<i64> draw(intents.size());
  for (std::size_t i = 0; i < intents.size(); ++i) {
    draw[i] = static_cast<i64>(rng() % static_cast<std::uint64_t>(ccap + 1));
    result.deliveries[i] = {intents[i].node, draw[i], false};
  }
  // Process in draw order; a holder defers only to strictly earlier audible
  // transmissions (equal draws start together and collide on air).
  std::vector<std::size_t> order(intents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(draw[a], a) < std::tie(draw[b], b);
  });
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    for (std::size_t oj = 0; oj < oi; ++oj) {
      const std::size_t j = order[oj];
      if (result.deliveries[j].suppressed) continue;
      if (draw[j] < draw[i] && audible(intents[i].node, intents[j].node)) {
        result.deliveries[i].suppressed = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace dish::sim
