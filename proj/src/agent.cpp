#include "fieldguard/agent.hpp"

#include <algorithm>

namespace fieldguard {

const char* to_string(CaseOutcome o) {
  switch (o) {
    case CaseOutcome::Confirmed: return "CONFIRMED";
    case CaseOutcome::Failed: return "FAILED";
    case CaseOutcome::Unconfirmed: return "UNCONFIRMED";
    case CaseOutcome::StandDown: return "STAND_DOWN";
  }
  return "?";
}

const char* to_string(CaseVerdict v) {
  switch (v) {
    case CaseVerdict::Prohibited: return "prohibited";
    case CaseVerdict::ForgedAssumed: return "forged_assumed";
    case CaseVerdict::ForgedConfirmed: return "forged_confirmed";
    case CaseVerdict::RatifiedAuthentic: return "ratified_authentic";
    case CaseVerdict::Denied: return "denied";
  }
  return "?";
}

ProtectionAgent::ProtectionAgent(Bus& bus, AgentConfig cfg) : bus_(bus), cfg_(std::move(cfg)) {
  id_ = bus_.attach(this);
  if (cfg_.readback_timeout == 0) cfg_.readback_timeout = 2 * bus_.max_frame_delay();
}

void ProtectionAgent::bind_channel(ChannelLink* link) {
  link_ = link;
  if (cfg_.verify_grace == 0)
    cfg_.verify_grace = std::min(link->round_trip(), cfg_.match_window);
  if (cfg_.ack_timeout == 0) cfg_.ack_timeout = 3 * link->round_trip();
}

bool ProtectionAgent::in_partition(std::uint8_t dst) const {
  for (const auto& [lo, hi] : cfg_.partition)
    if (dst >= lo && dst <= hi) return true;
  return false;
}

void ProtectionAgent::log(AuditKind kind, const std::optional<Telegram>& t,
                          std::string detail) {
  audit_.push_back(AuditRecord{bus_.now(), state_, kind,
                               pending_ ? pending_->case_id : -1, t, std::move(detail)});
}

void ProtectionAgent::enter(AgentStateKind s) {
  state_ = s;
  log(AuditKind::StateEntered, std::nullopt, to_string(s));
}

// --- ingestion (the Queue state, always active) ------------------------------

void ProtectionAgent::on_frame(const BusEvent& ev) {
  auto decoded = decode_telegram(ev.frame);
  if (!decoded.ok()) {
    ++counters_.corrupt_drops;
    log(AuditKind::CorruptDropped, std::nullopt, to_string(decoded.error()));
    return;
  }
  const Telegram& t = decoded.value();

  if (t.dst == kVoidAddress) {
    // Challenge-response liveness probe; answered from any state, immediately.
    if (auto nonce = extract_challenge(t); nonce && link_) {
      link_->send(Direction::AgentToMtu, MessageKind::ChallengeResponse,
                  std::span<const std::uint8_t>(nonce->data(), nonce->size()));
      ++counters_.challenges_answered;
      log(AuditKind::ChallengeAnswered, t, "");
    }
    return;
  }

  if (t.type == kTypeStatusResponse) {
    // Monitoring direction matters only while a correction awaits readback.
    if (pending_ && pending_->phase == Phase::AwaitReadback && t.src == pending_->device) {
      auto p = point_of(t);
      if (p && *p == pending_->point) {
        if (auto v = value_of(t)) handle_readback_value(*v);
        pump();
      }
    }
    return;
  }

  if (!is_control_direction(t.type)) return;
  if (!in_partition(t.dst)) {
    ++counters_.out_of_partition;
    return;
  }
  scada_queue_.push_back(QueuedCommand{t, ev.at});
  ++counters_.scada_queued;
  log(AuditKind::ScadaQueued, t, "");
  pump();
}

void ProtectionAgent::on_channel_message(std::span<const std::uint8_t> wire) {
  if (!link_) return;
  auto opened = link_->open_incoming(Direction::MtuToAgent, wire);
  if (!opened.ok()) {
    if (opened.error() == ChannelError::ReplayRejected)
      ++counters_.channel_replays;
    else
      ++counters_.channel_auth_failures;
    log(AuditKind::ChannelRejected, std::nullopt, to_string(opened.error()));
    return;
  }
  const SealedView& msg = opened.value();

  if (msg.kind == MessageKind::AuthCopy) {
    auto t = decode_telegram_body(msg.body);
    if (!t) return;
    auth_queue_.push_back(AuthEntry{*t, msg.seq, bus_.now()});
    ++counters_.auth_queued;
    log(AuditKind::AuthQueued, *t, "");
    prune_auth_queue();
    pump();
    return;
  }

  if (msg.kind == MessageKind::VerifyAck) {
    auto ack = decode_verify_ack(msg.body);
    if (!ack || !pending_ || ack->in_reply_to != pending_->wait_seq) return;
    log(ack->positive ? AuditKind::AckPositive : AuditKind::AckNegative, std::nullopt, "");
    switch (pending_->phase) {
      case Phase::AwaitResendAck:
      case Phase::AwaitProposalAck:
      case Phase::AwaitReportAck:
        handle_ack(ack->positive);
        break;
      case Phase::AwaitReadback:
        // Post-action acknowledgement raced the readback; settle after it.
        pending_->report_ack = ack->positive;
        break;
      default:
        break;
    }
    pump();
  }
}

// --- state machine -------------------------------------------------------------

void ProtectionAgent::pump() {
  if (pumping_) return;
  pumping_ = true;
  while (step()) {
  }
  pumping_ = false;
}

bool ProtectionAgent::step() {
  switch (state_) {
    case AgentStateKind::Listen: return step_listen();
    case AgentStateKind::Start: return step_start();
    case AgentStateKind::CheckRule: return step_check_rule();
    case AgentStateKind::VerifyCommand: return step_verify_command();
    case AgentStateKind::FightBack:
    case AgentStateKind::VerifyCorrection:
      return false;  // event-driven: acks, readbacks and timers move these
  }
  return false;
}

bool ProtectionAgent::step_listen() {
  if (scada_queue_.empty()) return false;
  enter(AgentStateKind::Start);
  return true;
}

bool ProtectionAgent::step_start() {
  if (pending_) return false;  // an old command is still being corrected
  if (scada_queue_.empty()) {
    enter(AgentStateKind::Listen);
    return true;
  }
  QueuedCommand cmd = scada_queue_.front();
  scada_queue_.pop_front();
  PendingCase c;
  c.case_id = next_case_id_++;
  c.suspect = cmd.telegram;
  c.arrival = cmd.arrival;
  c.plan = &neutralization_plan(cmd.telegram.type);
  pending_ = std::move(c);
  enter(AgentStateKind::CheckRule);
  return true;
}

bool ProtectionAgent::step_check_rule() {
  const Telegram& t = pending_->suspect;
  std::optional<std::string> hit;
  if (cfg_.detector) hit = cfg_.detector(t);
  if (!hit) {
    auto verdict = check_rules(t, cfg_.rules);
    if (verdict.prohibited) hit = verdict.rule_id;
  }
  if (hit) {
    pending_->verdict = CaseVerdict::Prohibited;
    pending_->rule_id = *hit;
    pending_->t_detect = bus_.now();
    log(AuditKind::Prohibited, t, *hit);
    enter(AgentStateKind::FightBack);
    begin_fight_back(false);
    return true;
  }
  enter(AgentStateKind::VerifyCommand);
  return true;
}

std::optional<std::size_t> ProtectionAgent::find_match(const Telegram& t, Us arrival) const {
  for (std::size_t i = 0; i < auth_queue_.size(); ++i) {
    const auto& e = auth_queue_[i];
    if (e.telegram.command_equal(t) &&
        std::llabs(e.arrival - arrival) <= cfg_.match_window)
      return i;
  }
  return std::nullopt;
}

void ProtectionAgent::accept_match(std::size_t auth_index) {
  // One auth copy validates exactly one bus command.
  auth_queue_.erase(auth_queue_.begin() + static_cast<std::ptrdiff_t>(auth_index));
  ++counters_.matched;
  log(AuditKind::Matched, pending_->suspect, "");
  mark_verified(pending_->suspect);
}

void ProtectionAgent::mark_verified(const Telegram& t) {
  auto family = family_of(t);
  auto point = point_of(t);
  auto value = value_of(t);
  if (!family || !point || !value) return;
  shadow_.record(t.dst, static_cast<std::uint8_t>(*family),
                 static_cast<std::uint8_t>(*point), *value);
  log(AuditKind::ShadowUpdated, t, "");
}

void ProtectionAgent::prune_auth_queue() {
  // An entry is dead once no queued or future command could still match it:
  // everything older than the oldest unprocessed arrival minus the window.
  Us horizon = bus_.now();
  if (pending_) horizon = std::min(horizon, pending_->arrival);
  if (!scada_queue_.empty()) horizon = std::min(horizon, scada_queue_.front().arrival);
  while (!auth_queue_.empty() && auth_queue_.front().arrival < horizon - cfg_.match_window)
    auth_queue_.pop_front();
}

bool ProtectionAgent::step_verify_command() {
  if (pending_->phase != Phase::GraceWait) return false;  // awaiting channel traffic

  if (auto idx = find_match(pending_->suspect, pending_->arrival)) {
    accept_match(*idx);
    close_case(CaseOutcome::Confirmed, false);
    return true;
  }

  // No copy yet. Hold the case briefly — on an honest run the copy is merely
  // trailing the short bus frame — then rule on it.
  const Us deadline = pending_->arrival + cfg_.verify_grace;
  if (bus_.now() < deadline) {
    arm_timer(deadline);
    return false;
  }

  const Priority prio = pending_->plan->priority;
  if (prio == Priority::None) {
    ++counters_.no_action_needed;
    log(AuditKind::NoActionNeeded, pending_->suspect, "");
    close_case(CaseOutcome::Confirmed, false);
    return true;
  }
  pending_->t_detect = bus_.now();
  log(AuditKind::Unmatched, pending_->suspect, to_string(prio));
  if (prio == Priority::High) {
    // Critical commands are neutralized first and reconciled afterwards.
    pending_->verdict = CaseVerdict::ForgedAssumed;
    enter(AgentStateKind::FightBack);
    begin_fight_back(false);
    return true;
  }
  // Medium/Low: ask for the missed copy before anything else.
  send_resend();
  pending_->phase = Phase::AwaitResendAck;
  arm_timer(bus_.now() + cfg_.ack_timeout);
  return true;
}

// --- channel emissions ----------------------------------------------------------

void ProtectionAgent::send_resend() {
  if (link_)
    pending_->wait_seq = link_->send(Direction::AgentToMtu, MessageKind::ResendRequest,
                                     encode_telegram_body(pending_->suspect));
  ++counters_.resend_requests;
  log(AuditKind::ResendSent, pending_->suspect, "");
}

void ProtectionAgent::send_verify(bool post_action) {
  VerifyRequestBody body{post_action, pending_->suspect};
  if (link_)
    pending_->wait_seq = link_->send(Direction::AgentToMtu, MessageKind::VerifyRequest,
                                     encode_verify_request(body));
  ++counters_.verify_requests;
  log(AuditKind::VerifySent, pending_->suspect, post_action ? "post-action" : "proposed");
}

void ProtectionAgent::send_report(const std::vector<std::uint8_t>& action_codes) {
  ReportBody body{pending_->suspect, action_codes};
  if (link_)
    link_->send(Direction::AgentToMtu, MessageKind::NeutralizationReport, encode_report(body));
  ++counters_.reports;
  log(AuditKind::ReportSent, pending_->suspect, "");
}

void ProtectionAgent::send_alarm(AlarmCode code, const std::optional<Telegram>& t) {
  AlarmBody body{static_cast<std::uint8_t>(code), t};
  if (link_) link_->send(Direction::AgentToMtu, MessageKind::Alarm, encode_alarm(body));
  ++counters_.alarms;
  if (pending_) pending_->alarm = true;
  log(AuditKind::AlarmRaised, t, std::to_string(static_cast<int>(code)));
}

// --- fight-back ------------------------------------------------------------------

std::vector<Telegram> ProtectionAgent::corrective_emissions(bool revert, bool& shadow_miss) {
  PendingCase& c = *pending_;
  const Telegram& s = c.suspect;
  c.device = s.dst;
  if (auto f = family_of(s)) c.family = static_cast<std::uint8_t>(*f);
  if (auto p = point_of(s)) c.point = static_cast<std::uint8_t>(*p);

  std::vector<Telegram> out;
  if (revert) {
    // Re-apply the suspected command verbatim: the master ratified it.
    if (auto v = value_of(s)) {
      c.intended = *v;
      out.push_back(s);
    }
    return out;
  }

  const auto value = value_of(s);
  for (PlanAction action : c.plan->actions) {
    switch (action) {
      case PlanAction::StoreSuspect:
        c.stored_suspect = s;
        log(AuditKind::SuspectStored, s, "");
        break;
      case PlanAction::Topple:
      case PlanAction::ConfirmThenTopple: {
        if (!value) break;  // nothing reversible in the payload
        if (s.type == kTypeReplace) {
          // A replace is not two-state; restore the shadow value of whatever
          // it touched.
          auto shadowed = shadow_.lookup(c.device, c.family, c.point);
          if (!shadowed) {
            shadow_miss = true;
            return out;
          }
          c.intended = *shadowed;
          out.push_back(make_replace(c.device, c.family, c.point, *shadowed));
        } else {
          c.intended = *value ^ 1;
          out.push_back(s.type == kTypeControl
                            ? make_control(c.device, c.point, static_cast<std::uint8_t>(c.intended))
                            : make_flag_switch(s.type, c.device, c.point,
                                               static_cast<std::uint8_t>(c.intended)));
        }
        break;
      }
      case PlanAction::ApplyShadowViaReplace:
      case PlanAction::ConfirmThenRestore: {
        auto shadowed = shadow_.lookup(c.device, c.family, c.point);
        if (!shadowed) {
          shadow_miss = true;
          return out;
        }
        c.intended = *shadowed;
        out.push_back(make_replace(c.device, c.family, c.point, *shadowed));
        break;
      }
      default:
        break;  // reporting and ack handling live in the machine itself
    }
  }
  return out;
}

void ProtectionAgent::emit_corrective(const Telegram& t, bool revert) {
  Telegram cmd = t;
  cmd.src = kMtuAddress;  // the agent speaks with the master's voice on the bus
  cmd.seq = next_seq_++;
  auto frame = encode_telegram(cmd);
  if (!frame.ok()) throw SimError("agent built an unencodable corrective");
  const Us delivery = bus_.transmit(id_, std::move(frame).value());
  ++counters_.corrective_emissions;
  if (revert) {
    if (pending_->t_second_corrective < 0) pending_->t_second_corrective = delivery;
  } else if (pending_->t_first_corrective < 0) {
    pending_->t_first_corrective = delivery;
  }
  log(AuditKind::CorrectiveEmitted, cmd, revert ? "revert" : "");
}

void ProtectionAgent::begin_fight_back(bool revert) {
  if (state_ != AgentStateKind::FightBack) enter(AgentStateKind::FightBack);
  bool shadow_miss = false;
  std::vector<Telegram> emissions = corrective_emissions(revert, shadow_miss);
  if (shadow_miss) {
    // No confirmed value to restore from; alarm instead of guessing.
    send_alarm(AlarmCode::ShadowMiss, pending_->suspect);
    send_report({});
    close_case(CaseOutcome::Failed, true);
    return;
  }

  std::vector<std::uint8_t> action_codes;
  if (revert) {
    action_codes.push_back(static_cast<std::uint8_t>(
        pending_->stored_suspect ? PlanAction::ApplySuspectOnNegativeAck
                                 : PlanAction::RevertOnNegativeAck));
  } else {
    for (PlanAction a : pending_->plan->actions)
      action_codes.push_back(static_cast<std::uint8_t>(a));
  }
  for (const Telegram& t : emissions) emit_corrective(t, revert);
  send_report(action_codes);

  if (!revert && pending_->verdict == CaseVerdict::ForgedAssumed) {
    // High priority: the action is taken; now ask the master to ratify it.
    send_verify(true);
    pending_->await_report_ack = true;
    pending_->report_deadline = bus_.now() + cfg_.ack_timeout;
  }

  if (emissions.empty()) {
    // Nothing reversible on the wire (parameterless interrogation types);
    // the report is the whole correction.
    close_case(CaseOutcome::Confirmed, true);
    return;
  }
  pending_->readback_attempts = 0;
  enter(AgentStateKind::VerifyCorrection);
  begin_readback();
}

// --- verify correction ------------------------------------------------------------

void ProtectionAgent::begin_readback() {
  Telegram probe = make_interrogation(pending_->device, pending_->family, pending_->point);
  probe.seq = next_seq_++;
  auto frame = encode_telegram(probe);
  if (!frame.ok()) throw SimError("agent built an unencodable interrogation");
  const Us delivery = bus_.transmit(id_, std::move(frame).value());
  pending_->phase = Phase::AwaitReadback;
  log(AuditKind::ReadbackSent, probe,
      "attempt " + std::to_string(pending_->readback_attempts + 1));
  arm_timer(delivery + cfg_.readback_timeout);
}

void ProtectionAgent::handle_readback_value(std::int32_t value) {
  if (value == pending_->intended) {
    pending_->t_confirm = bus_.now();
    log(AuditKind::ReadbackConfirmed, std::nullopt, std::to_string(value));
    resolve_after_readback();
    return;
  }
  log(AuditKind::ReadbackMismatch, std::nullopt,
      "read " + std::to_string(value) + " want " + std::to_string(pending_->intended));
  readback_retry_or_fail(false);
}

void ProtectionAgent::readback_retry_or_fail(bool timed_out) {
  if (timed_out) log(AuditKind::ReadbackTimeout, std::nullopt, "");
  if (pending_->readback_attempts < cfg_.readback_retries) {
    ++pending_->readback_attempts;
    begin_readback();
    return;
  }
  send_alarm(AlarmCode::CorrectionFailed, pending_->suspect);
  close_case(CaseOutcome::Failed, true);
}

void ProtectionAgent::resolve_after_readback() {
  if (!pending_->await_report_ack) {
    close_case(CaseOutcome::Confirmed, true);
    return;
  }
  if (pending_->report_ack.has_value()) {
    const bool positive = *pending_->report_ack;
    pending_->report_ack.reset();
    pending_->await_report_ack = false;
    if (positive) {
      close_case(CaseOutcome::Confirmed, true);
    } else {
      // The master disowned the correction: the suspect was authentic.
      pending_->verdict = CaseVerdict::RatifiedAuthentic;
      mark_verified(pending_->suspect);
      pending_->reverted = true;
      begin_fight_back(true);
    }
    return;
  }
  // Correction verified; the master's word is still outstanding.
  pending_->phase = Phase::AwaitReportAck;
  if (bus_.now() >= pending_->report_deadline) {
    log(AuditKind::AckTimeout, std::nullopt, "report");
    pending_->await_report_ack = false;
    close_case(CaseOutcome::Confirmed, true);
    return;
  }
  arm_timer(pending_->report_deadline);
}

// --- acks and timers ----------------------------------------------------------------

void ProtectionAgent::handle_ack(bool positive) {
  switch (pending_->phase) {
    case Phase::AwaitResendAck:
      if (positive) {
        // The master vouches for the command; same as a late auth copy.
        mark_verified(pending_->suspect);
        ++counters_.resend_recoveries;
        close_case(CaseOutcome::Confirmed, false);
      } else {
        send_verify(false);  // propose the correction, wait for confirmation
        pending_->phase = Phase::AwaitProposalAck;
        arm_timer(bus_.now() + cfg_.ack_timeout);
      }
      break;
    case Phase::AwaitProposalAck:
      if (positive) {
        pending_->verdict = CaseVerdict::ForgedConfirmed;
        enter(AgentStateKind::FightBack);
        begin_fight_back(false);
      } else {
        pending_->verdict = CaseVerdict::Denied;
        mark_verified(pending_->suspect);
        close_case(CaseOutcome::StandDown, true);
      }
      break;
    case Phase::AwaitReportAck:
      pending_->await_report_ack = false;
      if (positive) {
        close_case(CaseOutcome::Confirmed, true);
      } else {
        pending_->verdict = CaseVerdict::RatifiedAuthentic;
        mark_verified(pending_->suspect);
        pending_->reverted = true;
        begin_fight_back(true);
      }
      break;
    default:
      break;
  }
}

void ProtectionAgent::arm_timer(Us deadline) {
  const std::uint64_t gen = ++pending_->timer_gen;
  const int case_id = pending_->case_id;
  bus_.loop().at(std::max(deadline, bus_.now()), EventLoop::kLaneTimerBase + id_,
                 [this, case_id, gen]() {
                   if (!pending_ || pending_->case_id != case_id || pending_->timer_gen != gen)
                     return;  // stale
                   on_case_timer(gen);
                   pump();
                 });
}

void ProtectionAgent::on_case_timer(std::uint64_t) {
  switch (pending_->phase) {
    case Phase::GraceWait:
      // Handled by step_verify_command now that the grace has elapsed.
      break;
    case Phase::AwaitResendAck:
      // Channel unreachable or master mute: treat the command as forged.
      log(AuditKind::AckTimeout, pending_->suspect, "resend");
      send_alarm(AlarmCode::ChannelTimeout, pending_->suspect);
      pending_->verdict = CaseVerdict::ForgedAssumed;
      enter(AgentStateKind::FightBack);
      begin_fight_back(false);
      break;
    case Phase::AwaitProposalAck:
      // Confirmation-gated priorities never act without the master's word.
      log(AuditKind::AckTimeout, pending_->suspect, "proposal");
      send_alarm(AlarmCode::ChannelTimeout, pending_->suspect);
      close_case(CaseOutcome::Unconfirmed, true);
      break;
    case Phase::AwaitReadback:
      readback_retry_or_fail(true);
      break;
    case Phase::AwaitReportAck:
      log(AuditKind::AckTimeout, std::nullopt, "report");
      pending_->await_report_ack = false;
      close_case(CaseOutcome::Confirmed, true);
      break;
  }
}

void ProtectionAgent::close_case(CaseOutcome outcome, bool record) {
  if (record) {
    CaseResult r;
    r.case_id = pending_->case_id;
    r.agent_id = cfg_.id;
    r.suspect = pending_->suspect;
    r.t_arrival = pending_->arrival;
    r.t_detect = pending_->t_detect;
    r.t_first_corrective = pending_->t_first_corrective;
    r.t_second_corrective = pending_->t_second_corrective;
    r.t_confirm = pending_->t_confirm;
    r.verdict = pending_->verdict;
    r.outcome = outcome;
    r.alarm = pending_->alarm;
    cases_.push_back(std::move(r));
  }
  log(AuditKind::CaseClosed, pending_->suspect, to_string(outcome));
  pending_.reset();
  prune_auth_queue();
  enter(AgentStateKind::Listen);
}

}  // namespace fieldguard
