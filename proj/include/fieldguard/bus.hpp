#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <vector>

#include "fieldguard/common.hpp"
#include "fieldguard/telegram.hpp"

namespace fieldguard {

// Deterministic discrete-event core. One loop per simulated world owns the
// virtual clock; buses, channels and timers all schedule through it.
//
// Ordering of simultaneous events is total: (time, lane, enqueue index).
// Lane bands keep frame deliveries ahead of channel deliveries ahead of
// timers at the same instant, and order same-instant frame deliveries by
// origin id as the bus contract requires.
class EventLoop {
public:
  static constexpr int kLaneFrameBase = 1'000;
  static constexpr int kLaneChannelBase = 100'000;
  static constexpr int kLaneTimerBase = 200'000;

  Us now() const { return now_; }

  void at(Us t, int lane, std::function<void()> fn);

  /// Runs every event with time <= t and advances the clock to exactly t.
  void run_until(Us t);

  /// Runs until the queue drains; returns the final clock value.
  Us run_all();

  bool empty() const { return queue_.empty(); }

  /// Optional wall-clock pacing hook for demos: called with the virtual
  /// time delta before each event fires. Never set during measured runs.
  void set_pacing(std::function<void(Us)> hook) { pacing_ = std::move(hook); }

private:
  struct Ev {
    Us at;
    int lane;
    std::uint64_t index;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.at != b.at) return a.at > b.at;
      if (a.lane != b.lane) return a.lane > b.lane;
      return a.index > b.index;
    }
  };

  std::priority_queue<Ev, std::vector<Ev>, Later> queue_;
  Us now_ = 0;
  std::uint64_t next_index_ = 0;
  std::function<void(Us)> pacing_;
};

using AttachmentId = int;

struct BusConfig {
  int baud = 19200;            // legacy channel range 1200..19200
  Us propagation_us = 0;       // per-hop propagation delay
  std::uint64_t seed = 0;      // recorded for reproducibility; scheduling itself
                               // is deterministic independent of it
};

struct BusEvent {
  Us at = 0;               // delivery completion time
  AttachmentId origin = 0;
  Frame frame;

  friend bool operator==(const BusEvent&, const BusEvent&) = default;
};

class BusEndpoint {
public:
  virtual ~BusEndpoint() = default;
  virtual void on_frame(const BusEvent& ev) = 0;
};

// Party-line broadcast serial bus. Every attachment hears every frame except
// its own echo. Transmission delay is ceil(bytes * 10 / baud) of virtual
// time (start + 8 data + stop bits per byte) plus the configured propagation
// delay. Collisions are not modeled; a sender's own port serializes its
// back-to-back transmissions, and same-instant deliveries from distinct
// origins are ordered by origin id.
class Bus {
public:
  Bus(EventLoop& loop, BusConfig cfg);

  AttachmentId attach(BusEndpoint* endpoint);
  void detach(AttachmentId id);
  bool attached(AttachmentId id) const { return attachments_.count(id) != 0; }

  Us now() const { return loop_.now(); }

  /// Broadcasts the frame; returns its delivery completion time.
  Us transmit(AttachmentId origin, Frame frame);

  /// Transmission delay for a frame of the given size, excluding propagation.
  Us transmission_delay(std::size_t frame_bytes) const;
  Us max_frame_delay() const { return transmission_delay(kFrameOverhead + kMaxPayload); }

  /// Drives the loop to t; returns the events delivered by this call in
  /// (time, origin) order.
  std::vector<BusEvent> run_until(Us t);

  /// Every delivery since construction, in delivery order.
  const std::vector<BusEvent>& trace() const { return trace_; }

  const BusConfig& config() const { return cfg_; }
  EventLoop& loop() { return loop_; }

private:
  EventLoop& loop_;
  BusConfig cfg_;
  std::map<AttachmentId, BusEndpoint*> attachments_;
  std::map<BusEndpoint*, AttachmentId> by_endpoint_;
  std::map<AttachmentId, Us> port_free_;
  AttachmentId next_id_ = 1;
  std::vector<BusEvent> trace_;
};

}  // namespace fieldguard
