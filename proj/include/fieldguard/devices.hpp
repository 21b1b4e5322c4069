#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "fieldguard/bus.hpp"
#include "fieldguard/common.hpp"
#include "fieldguard/secure_channel.hpp"
#include "fieldguard/telegram.hpp"

namespace fieldguard {

// --- RTU ---------------------------------------------------------------------

/// Field device state. The legacy vulnerability is deliberate: an RTU applies
/// any well-formed telegram addressed to it, with no source authentication.
struct RtuState {
  std::uint8_t address = 0;
  std::map<std::uint8_t, std::uint8_t> switches;  // point -> 0/1 (family 64)
  // (family, point) -> value; set points, thresholds, smoothing, time
  // settings and remote parameterization all live here.
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::int16_t> params;
  // (family, point) -> 0/1; temporal lists, recipient, record transfer,
  // address lists, start-up.
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::uint8_t> flags;
  std::uint8_t last_applied_seq = 0;

  bool record_transfer_enabled(std::uint8_t point = 0) const {
    auto it = flags.find({std::uint8_t{204}, point});
    return it == flags.end() ? true : it->second != 0;
  }
  bool recipient_enabled(std::uint8_t point = 0) const {
    auto it = flags.find({std::uint8_t{203}, point});
    return it == flags.end() ? true : it->second != 0;
  }

  /// Current value for a (family, point) as reported by interrogation;
  /// absent entries read back as 0.
  std::int32_t readback(std::uint8_t family, std::uint8_t point) const;

  friend bool operator==(const RtuState&, const RtuState&) = default;
};

enum class DeviceError { AddressMismatch, PayloadSchemaMismatch };

struct RtuApplyOutcome {
  RtuState state;
  std::optional<Telegram> response;
};

/// Pure command application: returns the successor state and an optional
/// monitoring-direction response (status for interrogations).
Result<RtuApplyOutcome, DeviceError> rtu_apply(const RtuState& state, const Telegram& t);

class RtuDevice : public BusEndpoint {
public:
  RtuDevice(Bus& bus, RtuState initial);

  void on_frame(const BusEvent& ev) override;

  const RtuState& state() const { return state_; }
  AttachmentId attachment() const { return id_; }
  /// Silences the device (stops responding) without detaching it.
  void set_mute(bool mute) { mute_ = mute; }

private:
  Bus& bus_;
  RtuState state_;
  AttachmentId id_;
  std::uint8_t next_seq_ = 0;
  bool mute_ = false;
};

// --- MTU ----------------------------------------------------------------------

enum class AckPolicy {
  AlwaysPositive,
  AlwaysNegative,
  LookupByHistory,
  Silent,  // answers nothing; the agent runs on timeouts
};

const char* to_string(AckPolicy p);

struct MtuConfig {
  AckPolicy policy = AckPolicy::LookupByHistory;
  Us history_window = 500 * kMillisecond;  // byte-equal match horizon
  Us challenge_period = 0;                 // 0 disables challenge-response
  Us challenge_deadline = 0;               // 0 derives from link + bus delays
};

struct MtuScriptEntry {
  Us at = 0;
  Telegram telegram;
  bool mirror = true;  // seal an AUTH_COPY alongside the bus frame
};

struct ChallengeOutcome {
  Us issued_at = 0;
  Us deadline = 0;
  bool answered = false;
  Us answered_at = -1;
};

struct MtuStats {
  std::uint64_t issued = 0;
  std::uint64_t mirrored = 0;
  std::uint64_t verify_acks_positive = 0;
  std::uint64_t verify_acks_negative = 0;
  std::uint64_t reports_received = 0;
  std::uint64_t alarms_received = 0;
  std::uint64_t resend_requests = 0;
  std::uint64_t challenges_issued = 0;
  std::uint64_t challenges_answered = 0;
  std::uint64_t removal_suspected = 0;
  std::uint64_t stale_challenge_responses = 0;
  std::uint64_t channel_rejects = 0;
};

/// Master station model: issues scripted commands on the field bus, mirrors
/// authenticated copies to the partition-owning agent, answers verification
/// traffic per its acknowledgement policy, and runs the challenge-response
/// liveness probe against its agents.
class MtuDevice : public BusEndpoint, public ChannelPeer {
public:
  MtuDevice(Bus& bus, MtuConfig cfg, std::mt19937_64& rng);

  /// Registers the channel to the agent covering [lo, hi] device addresses.
  void add_agent_link(ChannelLink* link, std::uint8_t lo, std::uint8_t hi);

  void schedule_script(const std::vector<MtuScriptEntry>& script);

  /// Issues one command now: transmits on the bus and, when mirror is set,
  /// seals the identical telegram to the covering agent. Returns the bus
  /// delivery time.
  Us issue(Telegram cmd, bool mirror = true);

  /// History lookup behind verification: true iff a byte-equal (dst, type,
  /// payload) command was issued within the history window.
  bool issued_recently(const Telegram& t) const;

  void start_challenges();
  /// Emits one challenge telegram to the void address; returns the nonce
  /// bookkeeping entry.
  ChallengeNonce issue_challenge();

  void on_frame(const BusEvent& ev) override;
  void on_channel_message(std::span<const std::uint8_t> wire) override;

  const MtuStats& stats() const { return stats_; }
  const std::vector<ChallengeOutcome>& challenge_log() const { return challenge_log_; }
  std::uint64_t status_frames_seen() const { return status_frames_; }

private:
  struct AgentLink {
    ChannelLink* link = nullptr;
    std::uint8_t lo = 0, hi = 0;
  };

  AgentLink* link_for(std::uint8_t dst);
  void handle_message(ChannelLink& link, const SealedView& msg);
  void answer(ChannelLink& link, std::uint64_t request_seq, bool positive);

  Bus& bus_;
  MtuConfig cfg_;
  std::mt19937_64& rng_;
  AttachmentId id_;
  std::uint8_t next_seq_ = 0;
  std::vector<AgentLink> links_;
  std::deque<std::pair<Us, Telegram>> history_;
  std::map<std::array<std::uint8_t, 16>, std::size_t> outstanding_;  // nonce -> log index
  std::vector<ChallengeOutcome> challenge_log_;
  MtuStats stats_;
  std::uint64_t status_frames_ = 0;
  bool derive_deadline_ = true;
};

// --- intruder -------------------------------------------------------------------

struct InjectionEntry {
  Us at = 0;
  Telegram telegram;
};

/// Compromised node: transmits forged telegrams with the master's source
/// address and never mirrors anything on the authenticated channel.
class IntruderDevice : public BusEndpoint {
public:
  explicit IntruderDevice(Bus& bus);

  void schedule_script(const std::vector<InjectionEntry>& script);
  /// Injects one forged command now; returns the bus delivery time.
  Us inject(Telegram t);

  void on_frame(const BusEvent&) override {}

  std::uint64_t injected() const { return injected_; }
  AttachmentId attachment() const { return id_; }

private:
  Bus& bus_;
  AttachmentId id_;
  std::uint8_t next_seq_ = 0;
  std::uint64_t injected_ = 0;
};

}  // namespace fieldguard
