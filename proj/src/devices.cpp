#include "fieldguard/devices.hpp"

#include <algorithm>

namespace fieldguard {

// --- RTU ---------------------------------------------------------------------

std::int32_t RtuState::readback(std::uint8_t family, std::uint8_t point) const {
  if (family == kTypeControl) {
    auto it = switches.find(point);
    return it == switches.end() ? 0 : it->second;
  }
  if (is_parameter_family(family)) {
    auto it = params.find({family, point});
    return it == params.end() ? 0 : it->second;
  }
  if (is_flag_family(family)) {
    auto it = flags.find({family, point});
    return it == flags.end() ? 0 : it->second;
  }
  return 0;
}

Result<RtuApplyOutcome, DeviceError> rtu_apply(const RtuState& state, const Telegram& t) {
  if (t.dst != state.address) return DeviceError::AddressMismatch;
  if (validate_telegram(t)) return DeviceError::PayloadSchemaMismatch;

  RtuApplyOutcome out{state, std::nullopt};
  out.state.last_applied_seq = t.seq;

  const auto point = point_of(t);
  const auto value = value_of(t);

  if (t.type == kTypeControl) {
    out.state.switches[static_cast<std::uint8_t>(*point)] =
        static_cast<std::uint8_t>(*value);
  } else if (is_parameter_family(t.type)) {
    out.state.params[{t.type, static_cast<std::uint8_t>(*point)}] =
        static_cast<std::int16_t>(*value);
  } else if (is_flag_family(t.type)) {
    out.state.flags[{t.type, static_cast<std::uint8_t>(*point)}] =
        static_cast<std::uint8_t>(*value);
  } else if (t.type == kTypeReplace) {
    const auto family = static_cast<std::uint8_t>(*family_of(t));
    const auto p = static_cast<std::uint8_t>(*point);
    if (family == kTypeControl) {
      out.state.switches[p] = static_cast<std::uint8_t>(*value & 1);
    } else if (is_parameter_family(family)) {
      out.state.params[{family, p}] = static_cast<std::int16_t>(*value);
    } else {
      out.state.flags[{family, p}] = static_cast<std::uint8_t>(*value & 1);
    }
  } else if (t.type == kTypeSingleInterrogation || t.type == kTypeGroupInterrogation) {
    const auto family = static_cast<std::uint8_t>(*family_of(t));
    const auto p = static_cast<std::uint8_t>(*point);
    out.response = make_status(state.address, p, state.readback(family, p));
  }
  // Check/acknowledge/interrogation-control types (192-194, 198-200,
  // 213-222) leave state untouched.
  return out;
}

RtuDevice::RtuDevice(Bus& bus, RtuState initial) : bus_(bus), state_(std::move(initial)) {
  id_ = bus_.attach(this);
}

void RtuDevice::on_frame(const BusEvent& ev) {
  auto decoded = decode_telegram(ev.frame);
  if (!decoded.ok()) return;
  const Telegram& t = decoded.value();
  if (t.dst != state_.address) return;  // not ours; the void address never matches
  auto applied = rtu_apply(state_, t);
  if (!applied.ok()) return;
  state_ = std::move(applied).value().state;
  auto response = applied.value().response;
  if (response && !mute_) {
    response->seq = next_seq_++;
    auto frame = encode_telegram(*response);
    if (frame.ok()) bus_.transmit(id_, std::move(frame).value());
  }
}

// --- MTU ------------------------------------------------------------------------

const char* to_string(AckPolicy p) {
  switch (p) {
    case AckPolicy::AlwaysPositive: return "always-positive";
    case AckPolicy::AlwaysNegative: return "always-negative";
    case AckPolicy::LookupByHistory: return "lookup-by-history";
    case AckPolicy::Silent: return "silent";
  }
  return "?";
}

MtuDevice::MtuDevice(Bus& bus, MtuConfig cfg, std::mt19937_64& rng)
    : bus_(bus), cfg_(cfg), rng_(rng), derive_deadline_(cfg.challenge_deadline == 0) {
  id_ = bus_.attach(this);
}

void MtuDevice::add_agent_link(ChannelLink* link, std::uint8_t lo, std::uint8_t hi) {
  links_.push_back({link, lo, hi});
  if (derive_deadline_) {
    // Challenge deadline: twice the channel round trip plus one maximal
    // frame on the bus — tight enough to notice removal promptly, loose
    // enough to never false-alarm in simulation.
    cfg_.challenge_deadline =
        std::max<Us>(cfg_.challenge_deadline,
                     2 * (link->round_trip() + bus_.max_frame_delay()));
  }
}

MtuDevice::AgentLink* MtuDevice::link_for(std::uint8_t dst) {
  for (auto& l : links_)
    if (dst >= l.lo && dst <= l.hi) return &l;
  return nullptr;
}

void MtuDevice::schedule_script(const std::vector<MtuScriptEntry>& script) {
  for (const auto& entry : script) {
    bus_.loop().at(entry.at, EventLoop::kLaneTimerBase + id_,
                   [this, entry]() { issue(entry.telegram, entry.mirror); });
  }
}

Us MtuDevice::issue(Telegram cmd, bool mirror) {
  cmd.src = kMtuAddress;
  cmd.seq = next_seq_++;
  auto frame = encode_telegram(cmd);
  if (!frame.ok()) throw SimError(std::string("MTU cannot issue: ") + to_string(frame.error()));

  history_.emplace_back(bus_.now(), cmd);
  while (history_.size() > 4096) history_.pop_front();
  ++stats_.issued;

  const Us delivery = bus_.transmit(id_, std::move(frame).value());
  if (mirror) {
    if (auto* l = link_for(cmd.dst)) {
      l->link->send(Direction::MtuToAgent, MessageKind::AuthCopy,
                    encode_telegram_body(cmd));
      ++stats_.mirrored;
    }
  }
  return delivery;
}

bool MtuDevice::issued_recently(const Telegram& t) const {
  const Us now = bus_.now();
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (now - it->first > cfg_.history_window) break;
    if (it->second.command_equal(t)) return true;
  }
  return false;
}

void MtuDevice::start_challenges() {
  if (cfg_.challenge_period <= 0) return;
  bus_.loop().at(bus_.now() + cfg_.challenge_period, EventLoop::kLaneTimerBase + id_,
                 [this]() {
                   issue_challenge();
                   start_challenges();
                 });
}

ChallengeNonce MtuDevice::issue_challenge() {
  ChallengeNonce nonce;
  for (auto& b : nonce.nonce) b = static_cast<std::uint8_t>(rng_() & 0xff);
  nonce.issued_at = bus_.now();
  nonce.deadline = nonce.issued_at + cfg_.challenge_deadline;

  Telegram t = make_challenge(nonce.nonce);
  t.seq = next_seq_++;
  auto frame = encode_telegram(t);
  bus_.transmit(id_, std::move(frame).value());

  challenge_log_.push_back({nonce.issued_at, nonce.deadline, false, -1});
  const std::size_t index = challenge_log_.size() - 1;
  outstanding_[nonce.nonce] = index;
  ++stats_.challenges_issued;

  bus_.loop().at(nonce.deadline, EventLoop::kLaneTimerBase + id_, [this, n = nonce.nonce]() {
    auto it = outstanding_.find(n);
    if (it != outstanding_.end()) {
      outstanding_.erase(it);
      ++stats_.removal_suspected;  // RemovalSuspected: no response in time
    }
  });
  return nonce;
}

void MtuDevice::on_frame(const BusEvent& ev) {
  auto decoded = decode_telegram(ev.frame);
  if (!decoded.ok()) return;
  if (decoded.value().type == kTypeStatusResponse) ++status_frames_;
}

void MtuDevice::on_channel_message(std::span<const std::uint8_t> wire) {
  if (wire.size() < 4) {
    ++stats_.channel_rejects;
    return;
  }
  const std::uint32_t cid = (std::uint32_t(wire[0]) << 24) | (std::uint32_t(wire[1]) << 16) |
                            (std::uint32_t(wire[2]) << 8) | std::uint32_t(wire[3]);
  for (auto& l : links_) {
    if (l.link->channel_id() != cid) continue;
    auto opened = l.link->open_incoming(Direction::AgentToMtu, wire);
    if (!opened.ok()) {
      ++stats_.channel_rejects;
      return;
    }
    handle_message(*l.link, opened.value());
    return;
  }
  ++stats_.channel_rejects;
}

void MtuDevice::answer(ChannelLink& link, std::uint64_t request_seq, bool positive) {
  VerifyAckBody ack{request_seq, positive};
  link.send(Direction::MtuToAgent, MessageKind::VerifyAck, encode_verify_ack(ack));
  if (positive)
    ++stats_.verify_acks_positive;
  else
    ++stats_.verify_acks_negative;
}

void MtuDevice::handle_message(ChannelLink& link, const SealedView& msg) {
  switch (msg.kind) {
    case MessageKind::ResendRequest: {
      // "Did you issue this? If so, resend the authenticated copy."
      ++stats_.resend_requests;
      if (cfg_.policy == AckPolicy::Silent) return;
      auto t = decode_telegram_body(msg.body);
      if (!t) return;
      bool positive = false;
      switch (cfg_.policy) {
        case AckPolicy::AlwaysPositive: positive = true; break;
        case AckPolicy::AlwaysNegative: positive = false; break;
        default: positive = issued_recently(*t); break;
      }
      answer(link, msg.seq, positive);
      break;
    }
    case MessageKind::VerifyRequest: {
      // Endorsement of a proposed or completed correction: positive means
      // "that command was not mine — your correction stands"; negative means
      // "I issued it — stand down / topple it back".
      if (cfg_.policy == AckPolicy::Silent) return;
      auto req = decode_verify_request(msg.body);
      if (!req) return;
      bool positive = false;
      switch (cfg_.policy) {
        case AckPolicy::AlwaysPositive: positive = true; break;
        case AckPolicy::AlwaysNegative: positive = false; break;
        default: positive = !issued_recently(req->telegram); break;
      }
      answer(link, msg.seq, positive);
      break;
    }
    case MessageKind::NeutralizationReport:
      ++stats_.reports_received;
      break;
    case MessageKind::ChallengeResponse: {
      if (msg.body.size() != 16) return;
      std::array<std::uint8_t, 16> nonce;
      std::copy(msg.body.begin(), msg.body.end(), nonce.begin());
      auto it = outstanding_.find(nonce);
      if (it == outstanding_.end()) {
        ++stats_.stale_challenge_responses;  // unknown or already-used nonce
        return;
      }
      auto& entry = challenge_log_[it->second];
      if (bus_.now() > entry.deadline) {
        ++stats_.stale_challenge_responses;
        outstanding_.erase(it);
        return;
      }
      entry.answered = true;
      entry.answered_at = bus_.now();
      outstanding_.erase(it);  // single use
      ++stats_.challenges_answered;
      break;
    }
    case MessageKind::Alarm:
      ++stats_.alarms_received;
      break;
    default:
      break;
  }
}

// --- intruder ----------------------------------------------------------------

IntruderDevice::IntruderDevice(Bus& bus) : bus_(bus) { id_ = bus_.attach(this); }

void IntruderDevice::schedule_script(const std::vector<InjectionEntry>& script) {
  for (const auto& entry : script) {
    bus_.loop().at(entry.at, EventLoop::kLaneTimerBase + id_,
                   [this, t = entry.telegram]() { inject(t); });
  }
}

Us IntruderDevice::inject(Telegram t) {
  t.src = kMtuAddress;  // impersonate the master station
  t.seq = next_seq_++;
  auto frame = encode_telegram(t);
  if (!frame.ok()) throw SimError(std::string("uninjectable telegram: ") + to_string(frame.error()));
  ++injected_;
  return bus_.transmit(id_, std::move(frame).value());
}

}  // namespace fieldguard
