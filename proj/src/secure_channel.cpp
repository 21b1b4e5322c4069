#include "fieldguard/secure_channel.hpp"

#include <openssl/evp.h>

#include <cstring>

namespace fieldguard {

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::AuthCopy: return "AUTH_COPY";
    case MessageKind::VerifyRequest: return "VERIFY_REQUEST";
    case MessageKind::VerifyAck: return "VERIFY_ACK";
    case MessageKind::NeutralizationReport: return "NEUTRALIZATION_REPORT";
    case MessageKind::ResendRequest: return "RESEND_REQUEST";
    case MessageKind::ChallengeResponse: return "CHALLENGE_RESPONSE";
    case MessageKind::Alarm: return "ALARM";
  }
  return "?";
}

const char* to_string(ChannelError e) {
  switch (e) {
    case ChannelError::AuthFailure: return "AuthFailure";
    case ChannelError::ReplayRejected: return "ReplayRejected";
    case ChannelError::Malformed: return "Malformed";
  }
  return "?";
}

namespace {

constexpr std::size_t kHeaderSize = 4 + 8 + 1 + 2;
constexpr std::size_t kTagSize = 16;

void put_u32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * (7 - i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

std::array<std::uint8_t, 12> make_nonce(Direction dir, std::uint64_t seq) {
  std::array<std::uint8_t, 12> nonce{};
  nonce[0] = static_cast<std::uint8_t>(dir);
  put_u64(nonce.data() + 4, seq);
  return nonce;
}

bool aead_run(bool encrypt, const ChannelKey& key, const std::array<std::uint8_t, 12>& nonce,
              std::span<const std::uint8_t> aad, std::span<const std::uint8_t> in,
              std::uint8_t* out, std::uint8_t* tag) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) return false;
  bool ok = false;
  int len = 0;
  do {
    if (EVP_CipherInit_ex(ctx, EVP_chacha20_poly1305(), nullptr, nullptr, nullptr,
                          encrypt ? 1 : 0) != 1)
      break;
    if (EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_SET_IVLEN, 12, nullptr) != 1) break;
    if (EVP_CipherInit_ex(ctx, nullptr, nullptr, key.bytes.data(), nonce.data(),
                          encrypt ? 1 : 0) != 1)
      break;
    if (!encrypt &&
        EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_SET_TAG, kTagSize, tag) != 1)
      break;
    if (!aad.empty() &&
        EVP_CipherUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
      break;
    if (!in.empty() &&
        EVP_CipherUpdate(ctx, out, &len, in.data(), static_cast<int>(in.size())) != 1)
      break;
    if (EVP_CipherFinal_ex(ctx, out ? out + len : nullptr, &len) != 1) break;
    if (encrypt &&
        EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_GET_TAG, kTagSize, tag) != 1)
      break;
    ok = true;
  } while (false);
  EVP_CIPHER_CTX_free(ctx);
  return ok;
}

}  // namespace

ChannelKey derive_channel_key(std::uint64_t seed, std::uint32_t channel_id) {
  std::uint8_t material[12 + 8 + 4] = {'f', 'i', 'e', 'l', 'd', 'g', 'u',
                                       'a', 'r', 'd', '/', '1'};
  put_u64(material + 12, seed);
  put_u32(material + 20, channel_id);
  ChannelKey key;
  unsigned int out_len = 0;
  EVP_Digest(material, sizeof(material), key.bytes.data(), &out_len, EVP_sha256(), nullptr);
  return key;
}

std::vector<std::uint8_t> seal(const ChannelKey& key, std::uint32_t channel_id,
                               Direction dir, std::uint64_t seq, MessageKind kind,
                               std::span<const std::uint8_t> body) {
  std::vector<std::uint8_t> wire(kHeaderSize + body.size() + kTagSize);
  put_u32(wire.data(), channel_id);
  put_u64(wire.data() + 4, seq);
  wire[12] = static_cast<std::uint8_t>(kind);
  wire[13] = static_cast<std::uint8_t>(body.size() >> 8);
  wire[14] = static_cast<std::uint8_t>(body.size() & 0xff);
  const auto nonce = make_nonce(dir, seq);
  if (!aead_run(true, key, nonce, std::span(wire.data(), kHeaderSize), body,
                wire.data() + kHeaderSize, wire.data() + kHeaderSize + body.size()))
    throw SimError("AEAD seal failed");
  return wire;
}

Result<SealedView, ChannelError> open(const ChannelKey& key, Direction dir,
                                      std::span<const std::uint8_t> wire,
                                      ReplayState& replay) {
  if (wire.size() < kHeaderSize + kTagSize) return ChannelError::Malformed;
  const std::size_t body_len = (std::size_t(wire[13]) << 8) | wire[14];
  if (wire.size() != kHeaderSize + body_len + kTagSize) return ChannelError::Malformed;
  const std::uint8_t kind_byte = wire[12];
  if (kind_byte < 1 || kind_byte > 7) return ChannelError::Malformed;

  SealedView view;
  view.channel_id = get_u32(wire.data());
  view.seq = get_u64(wire.data() + 4);
  view.kind = static_cast<MessageKind>(kind_byte);
  view.body.resize(body_len);

  std::array<std::uint8_t, kTagSize> tag;
  std::memcpy(tag.data(), wire.data() + kHeaderSize + body_len, kTagSize);
  const auto nonce = make_nonce(dir, view.seq);
  if (!aead_run(false, key, nonce, wire.subspan(0, kHeaderSize),
                wire.subspan(kHeaderSize, body_len),
                body_len ? view.body.data() : nullptr, tag.data()))
    return ChannelError::AuthFailure;
  // Authentic but stale or replayed: equality counts as a replay.
  if (view.seq <= replay.last_accepted) return ChannelError::ReplayRejected;
  replay.last_accepted = view.seq;
  return view;
}

std::optional<std::array<std::uint8_t, 16>> extract_challenge(const Telegram& t) {
  if (t.dst != kVoidAddress || t.type != kTypeCheck || t.payload.size() != 16)
    return std::nullopt;
  std::array<std::uint8_t, 16> nonce;
  std::memcpy(nonce.data(), t.payload.data(), 16);
  return nonce;
}

// --- body codecs ------------------------------------------------------------

std::vector<std::uint8_t> encode_telegram_body(const Telegram& t) {
  auto frame = encode_telegram(t);
  if (!frame.ok()) throw SimError("unencodable telegram in channel body");
  return std::move(frame).value();
}

std::optional<Telegram> decode_telegram_body(std::span<const std::uint8_t> body) {
  auto t = decode_telegram(body);
  if (!t.ok()) return std::nullopt;
  return std::move(t).value();
}

std::vector<std::uint8_t> encode_verify_request(const VerifyRequestBody& b) {
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(b.post_action ? 1 : 0)};
  auto frame = encode_telegram_body(b.telegram);
  out.insert(out.end(), frame.begin(), frame.end());
  return out;
}

std::optional<VerifyRequestBody> decode_verify_request(std::span<const std::uint8_t> body) {
  if (body.size() < 1 + kFrameOverhead) return std::nullopt;
  auto t = decode_telegram_body(body.subspan(1));
  if (!t) return std::nullopt;
  return VerifyRequestBody{body[0] != 0, *t};
}

std::vector<std::uint8_t> encode_verify_ack(const VerifyAckBody& b) {
  std::vector<std::uint8_t> out(9);
  put_u64(out.data(), b.in_reply_to);
  out[8] = static_cast<std::uint8_t>(b.positive ? 1 : 0);
  return out;
}

std::optional<VerifyAckBody> decode_verify_ack(std::span<const std::uint8_t> body) {
  if (body.size() != 9) return std::nullopt;
  return VerifyAckBody{get_u64(body.data()), body[8] != 0};
}

std::vector<std::uint8_t> encode_report(const ReportBody& b) {
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(b.action_codes.size())};
  out.insert(out.end(), b.action_codes.begin(), b.action_codes.end());
  auto frame = encode_telegram_body(b.suspect);
  out.insert(out.end(), frame.begin(), frame.end());
  return out;
}

std::optional<ReportBody> decode_report(std::span<const std::uint8_t> body) {
  if (body.empty()) return std::nullopt;
  const std::size_t n = body[0];
  if (body.size() < 1 + n + kFrameOverhead) return std::nullopt;
  ReportBody r;
  r.action_codes.assign(body.begin() + 1, body.begin() + 1 + n);
  auto t = decode_telegram_body(body.subspan(1 + n));
  if (!t) return std::nullopt;
  r.suspect = *t;
  return r;
}

std::vector<std::uint8_t> encode_alarm(const AlarmBody& b) {
  std::vector<std::uint8_t> out{b.code};
  if (b.telegram) {
    auto frame = encode_telegram_body(*b.telegram);
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

std::optional<AlarmBody> decode_alarm(std::span<const std::uint8_t> body) {
  if (body.empty()) return std::nullopt;
  AlarmBody a;
  a.code = body[0];
  if (body.size() > 1) {
    auto t = decode_telegram_body(body.subspan(1));
    if (!t) return std::nullopt;
    a.telegram = *t;
  }
  return a;
}

// --- link -------------------------------------------------------------------

ChannelLink::ChannelLink(EventLoop& loop, std::uint32_t channel_id, ChannelKey key,
                         Us one_way_latency)
    : loop_(loop), channel_id_(channel_id), key_(key), latency_(one_way_latency) {}

std::uint64_t ChannelLink::send(Direction dir, MessageKind kind,
                                std::span<const std::uint8_t> body) {
  const int d = static_cast<int>(dir);
  const std::uint64_t seq = next_seq_[d]++;
  auto wire = seal(key_, channel_id_, dir, seq, kind, body);
  deliver_raw(dir, std::move(wire));
  return seq;
}

void ChannelLink::deliver_raw(Direction dir, std::vector<std::uint8_t> wire) {
  const int to = dir == Direction::MtuToAgent ? 1 : 0;
  loop_.at(loop_.now() + latency_,
           EventLoop::kLaneChannelBase + static_cast<int>(channel_id_) * 2 + to,
           [this, to, w = std::move(wire)]() {
             if (peers_[to]) peers_[to]->on_channel_message(w);
           });
}

Result<SealedView, ChannelError> ChannelLink::open_incoming(
    Direction dir, std::span<const std::uint8_t> wire) {
  return open(key_, dir, wire, replay_[static_cast<int>(dir)]);
}

}  // namespace fieldguard
