#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fieldguard/bus.hpp"
#include "fieldguard/common.hpp"
#include "fieldguard/telegram.hpp"

namespace fieldguard {

// Authenticated, confidential, replay-protected channel between the master
// station and a protection agent, modeled over a pre-shared 32-byte key.
//
// Sealed wire layout (integers big-endian):
//
//   channel id (4) | seq (8) | kind (1) | body length (2) | body | tag (16)
//
// The body bytes on the wire are ciphertext of the same length as the
// plaintext; the header is authenticated as associated data. seq is a
// per-direction strictly increasing 64-bit counter starting at 1.

enum class MessageKind : std::uint8_t {
  AuthCopy = 1,
  VerifyRequest = 2,
  VerifyAck = 3,
  NeutralizationReport = 4,
  ResendRequest = 5,
  ChallengeResponse = 6,
  Alarm = 7,
};

const char* to_string(MessageKind k);

enum class ChannelError { AuthFailure, ReplayRejected, Malformed };

const char* to_string(ChannelError e);

struct ChannelKey {
  std::array<std::uint8_t, 32> bytes{};
};

/// Deterministic stand-in for tamper-resistant key provisioning: both ends
/// of a channel derive the same key from the run seed and channel id.
ChannelKey derive_channel_key(std::uint64_t seed, std::uint32_t channel_id);

/// Direction of travel, part of the nonce so both sides can start their
/// counters at 1 without nonce reuse.
enum class Direction : std::uint8_t { MtuToAgent = 0, AgentToMtu = 1 };

struct SealedView {
  std::uint32_t channel_id = 0;
  std::uint64_t seq = 0;
  MessageKind kind = MessageKind::AuthCopy;
  std::vector<std::uint8_t> body;
};

struct ReplayState {
  std::uint64_t last_accepted = 0;
};

std::vector<std::uint8_t> seal(const ChannelKey& key, std::uint32_t channel_id,
                               Direction dir, std::uint64_t seq, MessageKind kind,
                               std::span<const std::uint8_t> body);

/// Verifies the tag and the strictly-increasing seq rule, then decrypts.
/// On success the replay state is advanced.
Result<SealedView, ChannelError> open(const ChannelKey& key, Direction dir,
                                      std::span<const std::uint8_t> wire,
                                      ReplayState& replay);

// --- challenge-response liveness -----------------------------------------

struct ChallengeNonce {
  std::array<std::uint8_t, 16> nonce{};
  Us issued_at = 0;
  Us deadline = 0;
};

/// The nonce payload of a void-addressed check command, if the telegram is
/// one. Malformed void-address traffic yields nullopt.
std::optional<std::array<std::uint8_t, 16>> extract_challenge(const Telegram& t);

// --- small body codecs ----------------------------------------------------
// The channel vocabulary. Telegrams travel inside bodies as full encoded
// frames so both ends exercise the same codec.

struct VerifyRequestBody {
  bool post_action = false;  // false: proposed correction, true: action taken
  Telegram telegram;
};

struct VerifyAckBody {
  std::uint64_t in_reply_to = 0;  // channel seq of the request being answered
  bool positive = false;
};

struct ReportBody {
  Telegram suspect;
  std::vector<std::uint8_t> action_codes;  // one PlanAction per corrective emission
};

struct AlarmBody {
  std::uint8_t code = 0;  // AlarmCode
  std::optional<Telegram> telegram;
};

enum class AlarmCode : std::uint8_t {
  ShadowMiss = 1,
  CorrectionFailed = 2,
  ChannelTimeout = 3,
};

std::vector<std::uint8_t> encode_telegram_body(const Telegram& t);
std::optional<Telegram> decode_telegram_body(std::span<const std::uint8_t> body);

std::vector<std::uint8_t> encode_verify_request(const VerifyRequestBody& b);
std::optional<VerifyRequestBody> decode_verify_request(std::span<const std::uint8_t> body);

std::vector<std::uint8_t> encode_verify_ack(const VerifyAckBody& b);
std::optional<VerifyAckBody> decode_verify_ack(std::span<const std::uint8_t> body);

std::vector<std::uint8_t> encode_report(const ReportBody& b);
std::optional<ReportBody> decode_report(std::span<const std::uint8_t> body);

std::vector<std::uint8_t> encode_alarm(const AlarmBody& b);
std::optional<AlarmBody> decode_alarm(std::span<const std::uint8_t> body);

// --- simulated duplex link -------------------------------------------------

class ChannelPeer {
public:
  virtual ~ChannelPeer() = default;
  virtual void on_channel_message(std::span<const std::uint8_t> wire) = 0;
};

/// Out-of-band MTU<->agent link with symmetric one-way latency, riding the
/// same event loop as the bus. Sealing/opening happens at the endpoints via
/// send()/open_incoming() so the crypto path is always exercised.
class ChannelLink {
public:
  ChannelLink(EventLoop& loop, std::uint32_t channel_id, ChannelKey key, Us one_way_latency);

  void bind(ChannelPeer* mtu_side, ChannelPeer* agent_side) {
    peers_[0] = mtu_side;
    peers_[1] = agent_side;
  }

  std::uint32_t channel_id() const { return channel_id_; }
  Us latency() const { return latency_; }
  Us round_trip() const { return 2 * latency_; }

  /// Seals and schedules delivery to the opposite peer; returns the channel
  /// seq used (for ack correlation).
  std::uint64_t send(Direction dir, MessageKind kind, std::span<const std::uint8_t> body);

  /// Opens a message received by the peer on the given side.
  Result<SealedView, ChannelError> open_incoming(Direction dir,
                                                 std::span<const std::uint8_t> wire);

  /// Injects raw bytes toward a peer without sealing (forgery testing).
  void deliver_raw(Direction dir, std::vector<std::uint8_t> wire);

  std::uint64_t sent_count(Direction dir) const {
    return next_seq_[static_cast<int>(dir)] - 1;
  }

private:
  EventLoop& loop_;
  std::uint32_t channel_id_;
  ChannelKey key_;
  Us latency_;
  std::array<ChannelPeer*, 2> peers_{nullptr, nullptr};
  std::array<std::uint64_t, 2> next_seq_{1, 1};   // indexed by sending direction
  std::array<ReplayState, 2> replay_{};           // indexed by arriving direction
};

}  // namespace fieldguard
