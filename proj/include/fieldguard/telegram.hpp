#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fieldguard/common.hpp"

namespace fieldguard {

// Sinaut-8FW-style telegram codec.
//
// Wire frame layout (all multi-byte payload fields big-endian):
//
//   STX | LEN | DST | SRC | TYPE | SEQ | PAYLOAD[LEN] | CHK | ETX
//
// LEN is the payload length, CHK is the XOR of every byte from LEN through
// the last payload byte, STX = 0x68 and ETX = 0x16. Total frame size is
// 8 + payload bytes. See docs/wire_format.md for worked examples.

constexpr std::uint8_t kStx = 0x68;
constexpr std::uint8_t kEtx = 0x16;
constexpr std::size_t kFrameOverhead = 8;
constexpr std::size_t kMaxPayload = 32;

constexpr std::uint8_t kMtuAddress = 0;     // master station / agent emissions
constexpr std::uint8_t kVoidAddress = 255;  // challenge-response target, no device
constexpr std::uint8_t kMinDeviceAddress = 1;
constexpr std::uint8_t kMaxDeviceAddress = 128;

// Control-direction type codes (master -> field devices).
constexpr std::uint8_t kTypeControl = 64;            // two-state switch command
constexpr std::uint8_t kTypeAnalogueSetPointLo = 65; // 65..67
constexpr std::uint8_t kTypeAnalogueSetPointHi = 67;
constexpr std::uint8_t kTypeDigitalSetPointLo = 68;  // 68..70
constexpr std::uint8_t kTypeDigitalSetPointHi = 70;
constexpr std::uint8_t kTypeCheck = 192;             // also carries challenge nonces to dst 255
constexpr std::uint8_t kTypeRepeatRequest = 193;
constexpr std::uint8_t kTypeStartAck = 194;
constexpr std::uint8_t kTypeReplace = 195;
constexpr std::uint8_t kTypeSingleInterrogation = 196;
constexpr std::uint8_t kTypeGroupInterrogation = 197;
constexpr std::uint8_t kTypeThresholdLimit = 205;
constexpr std::uint8_t kTypeSmoothingFactor = 206;
constexpr std::uint8_t kTypeFineTimeSync = 207;
constexpr std::uint8_t kTypeSetMinutes = 208;
constexpr std::uint8_t kTypeSetCalendar = 209;
constexpr std::uint8_t kTypeSwitchAddressLists = 210;
constexpr std::uint8_t kTypeStartUpRequest = 211;
constexpr std::uint8_t kTypeRemoteParam = 212;
constexpr std::uint8_t kTypeMatrixCheck = 213;

// Monitoring direction is reduced to a single status-response code carrying
// {point, value}; everything else field devices report is out of scope.
constexpr std::uint8_t kTypeStatusResponse = 1;

enum class CodecError {
  BadFraming,
  BadChecksum,
  InvalidType,
  InvalidAddress,
  PayloadSchemaMismatch,
};

const char* to_string(CodecError e);

bool is_valid_type(int code);
bool is_control_direction(int code);
/// Families whose value lives in the RTU parameter table (set points,
/// thresholds, smoothing, time settings, remote parameterization).
bool is_parameter_family(int code);
/// Families modeled as on/off flags on the RTU.
bool is_flag_family(int code);
/// Any family a replace command (type 195) can restore.
bool is_restorable_family(int code);

struct Telegram {
  std::uint8_t dst = 0;
  std::uint8_t src = 0;
  std::uint8_t type = 0;
  std::uint8_t seq = 0;  // per-sender wrap-around counter, no security meaning
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Telegram&, const Telegram&) = default;

  /// Byte equality on (dst, type, payload) — the command-matching contract.
  /// seq is excluded: it only correlates duplicates on the bus.
  bool command_equal(const Telegram& other) const {
    return dst == other.dst && type == other.type && payload == other.payload;
  }
};

using Frame = std::vector<std::uint8_t>;

enum class FieldKind : std::uint8_t {
  U8,      // unsigned byte, range-checked
  I16,     // signed 16-bit big-endian
  Family,  // byte naming a restorable telegram family
  Nonce,   // 16-byte opaque blob
};

struct FieldSpec {
  const char* name;
  FieldKind kind;
  std::int32_t min = 0;
  std::int32_t max = 255;
  int width() const { return kind == FieldKind::I16 ? 2 : kind == FieldKind::Nonce ? 16 : 1; }
};

struct PayloadLayout {
  std::vector<FieldSpec> fields;
  int byte_size() const;
};

struct Schema {
  int type = 0;
  const char* name = "";
  std::vector<PayloadLayout> layouts;  // a payload must match exactly one layout
};

/// Total over every valid type code (including status response 1); null for
/// anything else.
const Schema* payload_schema(int type);

/// XOR fold over a byte range; the frame checksum primitive.
std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes);

/// Full validity check: type known, addresses legal for the type, payload
/// matching one schema layout with all fields in range.
std::optional<CodecError> validate_telegram(const Telegram& t);

Result<Frame, CodecError> encode_telegram(const Telegram& t);
Result<Telegram, CodecError> decode_telegram(std::span<const std::uint8_t> bytes);

/// Schema-driven field access by name; nullopt when the telegram's layout
/// has no such field.
std::optional<std::int64_t> field_value(const Telegram& t, const std::string& name);

/// The telegram family a command touches: the embedded family byte for
/// replace/interrogation telegrams, the type code itself otherwise.
std::optional<int> family_of(const Telegram& t);
std::optional<int> point_of(const Telegram& t);
/// The carried value (value/limit/factor field), sign-extended.
std::optional<std::int32_t> value_of(const Telegram& t);

// Builders for the payload shapes used throughout the simulator. src
// defaults to the master address since control-direction traffic always
// claims to come from it.
Telegram make_control(std::uint8_t dst, std::uint8_t point, std::uint8_t on_off);
Telegram make_set_point(std::uint8_t type, std::uint8_t dst, std::uint8_t point, std::int32_t value);
Telegram make_replace(std::uint8_t dst, std::uint8_t family, std::uint8_t point, std::int32_t value);
Telegram make_interrogation(std::uint8_t dst, std::uint8_t family, std::uint8_t point);
Telegram make_status(std::uint8_t src, std::uint8_t point, std::int32_t value);
Telegram make_flag_switch(std::uint8_t type, std::uint8_t dst, std::uint8_t point, std::uint8_t on_off);
Telegram make_empty(std::uint8_t type, std::uint8_t dst);
Telegram make_challenge(const std::array<std::uint8_t, 16>& nonce);

/// Human-readable one-liner for traces and audit logs.
std::string describe(const Telegram& t);

}  // namespace fieldguard
