#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "fieldguard/audit.hpp"
#include "fieldguard/bus.hpp"
#include "fieldguard/plan.hpp"
#include "fieldguard/rules.hpp"
#include "fieldguard/secure_channel.hpp"
#include "fieldguard/shadow.hpp"
#include "fieldguard/telegram.hpp"

namespace fieldguard {

struct AgentConfig {
  int id = 0;
  // Device address ranges this agent is responsible for (inclusive).
  std::vector<std::pair<std::uint8_t, std::uint8_t>> partition{{1, 128}};
  // A bus command and its authenticated copy match when byte-equal in
  // (dst, type, payload) and their arrival times differ by at most this.
  Us match_window = 500 * kMillisecond;
  // How long to hold an unmatched command before ruling it forged: the
  // channel copy usually trails short bus frames, so give it one channel
  // round trip to show up. 0 derives 2x the link latency at wiring time.
  Us verify_grace = 0;
  // Resend/verify acknowledgement timeout. 0 derives 3x the link round trip.
  Us ack_timeout = 0;
  // Per-attempt readback timeout. 0 derives 2x the maximal frame delay.
  Us readback_timeout = 0;
  int readback_retries = 3;
  std::vector<Rule> rules;
  Detector detector;  // optional plug-in detector, same verdict as a rule hit
};

enum class CaseOutcome { Confirmed, Failed, Unconfirmed, StandDown };
enum class CaseVerdict {
  Prohibited,         // local rule hit, corrected without asking the master
  ForgedAssumed,      // high priority, acted before the master answered
  ForgedConfirmed,    // medium/low priority, master endorsed the correction
  RatifiedAuthentic,  // master disowned the correction; original re-applied
  Denied,             // master vetoed a proposed correction (command was real)
};

const char* to_string(CaseOutcome o);
const char* to_string(CaseVerdict v);

/// One completed defence case, the unit of reporting.
struct CaseResult {
  int case_id = 0;
  int agent_id = 0;
  Telegram suspect;
  Us t_arrival = 0;             // suspect delivery completion on the bus
  Us t_detect = -1;             // verdict time
  Us t_first_corrective = -1;   // completion of the first corrective emission
  Us t_second_corrective = -1;  // completion of the revert emission, if any
  Us t_confirm = -1;            // readback confirmation time
  CaseVerdict verdict = CaseVerdict::ForgedAssumed;
  CaseOutcome outcome = CaseOutcome::Confirmed;
  bool alarm = false;
};

struct AgentCounters {
  std::uint64_t scada_queued = 0;
  std::uint64_t auth_queued = 0;
  std::uint64_t matched = 0;
  std::uint64_t resend_recoveries = 0;  // converted to matched by the channel
  std::uint64_t no_action_needed = 0;   // unmatched types that need no correction
  std::uint64_t corrective_emissions = 0;
  std::uint64_t verify_requests = 0;
  std::uint64_t resend_requests = 0;
  std::uint64_t reports = 0;
  std::uint64_t alarms = 0;
  std::uint64_t corrupt_drops = 0;
  std::uint64_t channel_auth_failures = 0;
  std::uint64_t channel_replays = 0;
  std::uint64_t challenges_answered = 0;
  std::uint64_t out_of_partition = 0;
};

/// The sniffing defence node. Drives a sequential state machine over two
/// queues (bus commands, authenticated copies); ingestion is always active
/// and never blocks on the machine's current state. One case is in flight
/// at a time; new arrivals queue behind it.
class ProtectionAgent : public BusEndpoint, public ChannelPeer {
public:
  ProtectionAgent(Bus& bus, AgentConfig cfg);

  /// Binds the authenticated channel to the master and derives any timeout
  /// defaults left at 0 in the config.
  void bind_channel(ChannelLink* link);

  // Ingestion (the Queue state, always active).
  void on_frame(const BusEvent& ev) override;
  void on_channel_message(std::span<const std::uint8_t> wire) override;

  /// Executes at most one state transition; returns whether one happened.
  /// Ingestion calls this in a loop already, so driving it manually is only
  /// needed in tests.
  bool step();

  AgentStateKind state() const { return state_; }
  const AgentConfig& config() const { return cfg_; }
  const ShadowStore& shadow() const { return shadow_; }
  const std::vector<AuditRecord>& audit() const { return audit_; }
  const std::vector<CaseResult>& cases() const { return cases_; }
  const AgentCounters& counters() const { return counters_; }
  std::size_t scada_queue_depth() const { return scada_queue_.size(); }
  std::size_t auth_queue_depth() const { return auth_queue_.size(); }
  AttachmentId attachment() const { return id_; }
  bool in_partition(std::uint8_t dst) const;

private:
  struct QueuedCommand {
    Telegram telegram;
    Us arrival = 0;
  };
  struct AuthEntry {
    Telegram telegram;
    std::uint64_t channel_seq = 0;
    Us arrival = 0;
  };
  enum class Phase {
    GraceWait,         // parked in VerifyCommand waiting for a possible copy
    AwaitResendAck,    // RESEND_REQUEST outstanding
    AwaitProposalAck,  // pre-action VERIFY_REQUEST outstanding (medium/low)
    AwaitReadback,     // interrogation outstanding
    AwaitReportAck,    // readback done, post-action VERIFY_REQUEST pending
  };
  struct PendingCase {
    int case_id = 0;
    Telegram suspect;
    Us arrival = 0;
    const PlanRow* plan = nullptr;
    Phase phase = Phase::GraceWait;
    CaseVerdict verdict = CaseVerdict::ForgedAssumed;
    std::string rule_id;
    std::uint64_t wait_seq = 0;    // channel seq the next ack must reference
    std::uint64_t timer_gen = 0;   // stale-timer guard
    bool reverted = false;
    bool await_report_ack = false;
    Us report_deadline = 0;          // post-action acknowledgement deadline
    std::optional<bool> report_ack;  // ack that arrived before readback finished
    std::optional<Telegram> stored_suspect;
    // Correction target for readback.
    std::uint8_t device = 0, family = 0, point = 0;
    std::int32_t intended = 0;
    int readback_attempts = 0;
    // Timestamps for the case record.
    Us t_detect = -1, t_first_corrective = -1, t_second_corrective = -1, t_confirm = -1;
    bool alarm = false;
  };

  // One transition per state.
  bool step_listen();
  bool step_start();
  bool step_check_rule();
  bool step_verify_command();

  void pump();
  void enter(AgentStateKind s);
  void log(AuditKind kind, const std::optional<Telegram>& t, std::string detail);

  // Matching and verification.
  std::optional<std::size_t> find_match(const Telegram& t, Us arrival) const;
  void accept_match(std::size_t auth_index);
  void mark_verified(const Telegram& t);
  void prune_auth_queue();

  // Correction machinery.
  void begin_fight_back(bool revert);
  std::vector<Telegram> corrective_emissions(bool revert, bool& shadow_miss);
  void emit_corrective(const Telegram& t, bool revert);
  void send_report(const std::vector<std::uint8_t>& action_codes);
  void send_verify(bool post_action);
  void send_resend();
  void send_alarm(AlarmCode code, const std::optional<Telegram>& t);
  void begin_readback();
  void handle_readback_value(std::int32_t value);
  void readback_retry_or_fail(bool timed_out);
  void resolve_after_readback();
  void handle_ack(bool positive);
  void close_case(CaseOutcome outcome, bool record);
  void arm_timer(Us deadline);
  void on_case_timer(std::uint64_t gen);

  Bus& bus_;
  AgentConfig cfg_;
  ChannelLink* link_ = nullptr;
  AttachmentId id_;
  AgentStateKind state_ = AgentStateKind::Listen;
  std::deque<QueuedCommand> scada_queue_;
  std::deque<AuthEntry> auth_queue_;
  std::optional<PendingCase> pending_;
  ShadowStore shadow_;
  std::vector<AuditRecord> audit_;
  std::vector<CaseResult> cases_;
  AgentCounters counters_;
  int next_case_id_ = 1;
  std::uint8_t next_seq_ = 0;
  bool pumping_ = false;
};

}  // namespace fieldguard
