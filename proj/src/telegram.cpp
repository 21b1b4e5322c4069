#include "fieldguard/telegram.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace fieldguard {

const char* to_string(CodecError e) {
  switch (e) {
    case CodecError::BadFraming: return "BadFraming";
    case CodecError::BadChecksum: return "BadChecksum";
    case CodecError::InvalidType: return "InvalidType";
    case CodecError::InvalidAddress: return "InvalidAddress";
    case CodecError::PayloadSchemaMismatch: return "PayloadSchemaMismatch";
  }
  return "?";
}

bool is_valid_type(int code) {
  return code == kTypeStatusResponse || (code >= 64 && code <= 70) ||
         (code >= 192 && code <= 222);
}

bool is_control_direction(int code) {
  return (code >= 64 && code <= 70) || (code >= 192 && code <= 222);
}

bool is_parameter_family(int code) {
  return (code >= kTypeAnalogueSetPointLo && code <= kTypeDigitalSetPointHi) ||
         code == kTypeThresholdLimit || code == kTypeSmoothingFactor ||
         code == kTypeFineTimeSync || code == kTypeSetMinutes ||
         code == kTypeSetCalendar || code == kTypeRemoteParam;
}

bool is_flag_family(int code) {
  return (code >= 201 && code <= 204) || code == kTypeSwitchAddressLists ||
         code == kTypeStartUpRequest;
}

bool is_restorable_family(int code) {
  return code == kTypeControl || is_parameter_family(code) || is_flag_family(code);
}

int PayloadLayout::byte_size() const {
  int n = 0;
  for (const auto& f : fields) n += f.width();
  return n;
}

namespace {

constexpr FieldSpec kPoint{"point", FieldKind::U8, 0, 255};
constexpr FieldSpec kOnOff{"value", FieldKind::U8, 0, 1};
constexpr FieldSpec kByteValue{"value", FieldKind::U8, 0, 255};
constexpr FieldSpec kWordValue{"value", FieldKind::I16, -32768, 32767};
constexpr FieldSpec kFamily{"family", FieldKind::Family};

const std::map<int, Schema>& schema_table() {
  static const std::map<int, Schema> table = [] {
    std::map<int, Schema> m;
    auto add = [&m](int type, const char* name, std::vector<PayloadLayout> layouts) {
      m.emplace(type, Schema{type, name, std::move(layouts)});
    };

    add(kTypeStatusResponse, "status response",
        {{{kPoint, kWordValue}}});
    add(kTypeControl, "control", {{{kPoint, kOnOff}}});
    for (int t = kTypeAnalogueSetPointLo; t <= kTypeAnalogueSetPointHi; ++t)
      add(t, "analogue set point", {{{kPoint, kWordValue}}});
    for (int t = kTypeDigitalSetPointLo; t <= kTypeDigitalSetPointHi; ++t)
      add(t, "digital set point", {{{kPoint, kByteValue}}});
    // The check command doubles as the challenge carrier: an empty payload
    // on the device-addressed form, a 16-byte nonce when sent to the void
    // address.
    add(kTypeCheck, "check command",
        {PayloadLayout{}, {{FieldSpec{"nonce", FieldKind::Nonce}}}});
    add(kTypeRepeatRequest, "repeat request / TFK-acknowledge", {PayloadLayout{}});
    add(kTypeStartAck, "start acknowledgement", {PayloadLayout{}});
    add(kTypeReplace, "replace command", {{{kFamily, kPoint, kWordValue}}});
    add(kTypeSingleInterrogation, "single interrogation", {{{kFamily, kPoint}}});
    add(kTypeGroupInterrogation, "group interrogation", {{{kFamily, kPoint}}});
    for (int t = 198; t <= 200; ++t) add(t, "multiple request", {PayloadLayout{}});
    add(201, "switch on temporal lists", {{{kPoint, kOnOff}}});
    add(202, "switch off temporal lists", {{{kPoint, kOnOff}}});
    add(203, "switch on/off recipient", {{{kPoint, kOnOff}}});
    add(204, "switch off record transfer", {{{kPoint, kOnOff}}});
    add(kTypeThresholdLimit, "threshold value limit",
        {{{kPoint, FieldSpec{"limit", FieldKind::I16, -32768, 32767}}}});
    add(kTypeSmoothingFactor, "smoothing factor",
        {{{kPoint, FieldSpec{"factor", FieldKind::U8, 0, 255}}}});
    add(kTypeFineTimeSync, "fine time synchronization", {{{kPoint, kWordValue}}});
    add(kTypeSetMinutes, "setting of minutes", {{{kPoint, kWordValue}}});
    add(kTypeSetCalendar, "setting of calendar", {{{kPoint, kWordValue}}});
    add(kTypeSwitchAddressLists, "switch on/off addresses in lists", {{{kPoint, kOnOff}}});
    add(kTypeStartUpRequest, "start-up request", {{{kPoint, kOnOff}}});
    add(kTypeRemoteParam, "remote parameterization", {{{kPoint, kWordValue}}});
    add(kTypeMatrixCheck, "matrix-check", {PayloadLayout{}});
    add(214, "4-byte-storage interrogation control", {PayloadLayout{}});
    for (int t = 215; t <= 222; ++t)
      add(t, "interrogation ZFBIT/STOP-cause", {PayloadLayout{}});
    return m;
  }();
  return table;
}

const PayloadLayout* matching_layout(const Schema& s, std::size_t payload_size) {
  for (const auto& l : s.layouts)
    if (static_cast<std::size_t>(l.byte_size()) == payload_size) return &l;
  return nullptr;
}

std::optional<std::int64_t> read_field(const PayloadLayout& layout,
                                       std::span<const std::uint8_t> payload,
                                       const std::string& name) {
  std::size_t off = 0;
  for (const auto& f : layout.fields) {
    if (name == f.name) {
      switch (f.kind) {
        case FieldKind::U8:
        case FieldKind::Family:
          return payload[off];
        case FieldKind::I16:
          return static_cast<std::int16_t>((payload[off] << 8) | payload[off + 1]);
        case FieldKind::Nonce:
          return std::nullopt;  // blobs have no scalar value
      }
    }
    off += static_cast<std::size_t>(f.width());
  }
  return std::nullopt;
}

std::optional<CodecError> check_fields(const PayloadLayout& layout,
                                       std::span<const std::uint8_t> payload) {
  std::size_t off = 0;
  for (const auto& f : layout.fields) {
    switch (f.kind) {
      case FieldKind::U8: {
        int v = payload[off];
        if (v < f.min || v > f.max) return CodecError::PayloadSchemaMismatch;
        break;
      }
      case FieldKind::I16: {
        auto v = static_cast<std::int16_t>((payload[off] << 8) | payload[off + 1]);
        if (v < f.min || v > f.max) return CodecError::PayloadSchemaMismatch;
        break;
      }
      case FieldKind::Family:
        if (!is_restorable_family(payload[off])) return CodecError::PayloadSchemaMismatch;
        break;
      case FieldKind::Nonce:
        break;
    }
    off += static_cast<std::size_t>(f.width());
  }
  return std::nullopt;
}

std::optional<CodecError> check_addresses(const Telegram& t) {
  auto is_device = [](std::uint8_t a) {
    return a >= kMinDeviceAddress && a <= kMaxDeviceAddress;
  };
  if (t.type == kTypeStatusResponse) {
    // Monitoring direction: device reports to the master.
    if (t.dst != kMtuAddress || !is_device(t.src)) return CodecError::InvalidAddress;
    return std::nullopt;
  }
  // Control direction. The void address is legal only for the nonce-carrying
  // check command used by the challenge-response protocol.
  if (t.dst == kVoidAddress) {
    if (t.type != kTypeCheck || t.payload.size() != 16) return CodecError::InvalidAddress;
  } else if (!is_device(t.dst)) {
    return CodecError::InvalidAddress;
  }
  if (t.src != kMtuAddress && !is_device(t.src)) return CodecError::InvalidAddress;
  return std::nullopt;
}

}  // namespace

const Schema* payload_schema(int type) {
  const auto& table = schema_table();
  auto it = table.find(type);
  return it == table.end() ? nullptr : &it->second;
}

std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t acc = 0;
  for (auto b : bytes) acc ^= b;
  return acc;
}

std::optional<CodecError> validate_telegram(const Telegram& t) {
  const Schema* schema = payload_schema(t.type);
  if (!schema) return CodecError::InvalidType;
  if (auto err = check_addresses(t)) return err;
  const PayloadLayout* layout = matching_layout(*schema, t.payload.size());
  if (!layout) return CodecError::PayloadSchemaMismatch;
  return check_fields(*layout, t.payload);
}

Result<Frame, CodecError> encode_telegram(const Telegram& t) {
  if (auto err = validate_telegram(t)) return *err;
  Frame f;
  f.reserve(kFrameOverhead + t.payload.size());
  f.push_back(kStx);
  f.push_back(static_cast<std::uint8_t>(t.payload.size()));
  f.push_back(t.dst);
  f.push_back(t.src);
  f.push_back(t.type);
  f.push_back(t.seq);
  f.insert(f.end(), t.payload.begin(), t.payload.end());
  // Checksum covers LEN through the last payload byte.
  f.push_back(xor_checksum(std::span(f).subspan(1)));
  f.push_back(kEtx);
  return f;
}

Result<Telegram, CodecError> decode_telegram(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameOverhead || bytes.size() > kFrameOverhead + kMaxPayload)
    return CodecError::BadFraming;
  if (bytes.front() != kStx || bytes.back() != kEtx) return CodecError::BadFraming;
  const std::size_t payload_len = bytes[1];
  if (payload_len != bytes.size() - kFrameOverhead) return CodecError::BadFraming;
  const std::uint8_t expected = bytes[bytes.size() - 2];
  if (xor_checksum(bytes.subspan(1, 5 + payload_len)) != expected)
    return CodecError::BadChecksum;

  Telegram t;
  t.dst = bytes[2];
  t.src = bytes[3];
  t.type = bytes[4];
  t.seq = bytes[5];
  t.payload.assign(bytes.begin() + 6, bytes.begin() + 6 + payload_len);
  if (auto err = validate_telegram(t)) return *err;
  return t;
}

std::optional<std::int64_t> field_value(const Telegram& t, const std::string& name) {
  const Schema* schema = payload_schema(t.type);
  if (!schema) return std::nullopt;
  const PayloadLayout* layout = matching_layout(*schema, t.payload.size());
  if (!layout) return std::nullopt;
  return read_field(*layout, t.payload, name);
}

std::optional<int> family_of(const Telegram& t) {
  if (t.type == kTypeReplace || t.type == kTypeSingleInterrogation ||
      t.type == kTypeGroupInterrogation) {
    if (auto f = field_value(t, "family")) return static_cast<int>(*f);
    return std::nullopt;
  }
  if (is_restorable_family(t.type)) return t.type;
  return std::nullopt;
}

std::optional<int> point_of(const Telegram& t) {
  if (auto p = field_value(t, "point")) return static_cast<int>(*p);
  return std::nullopt;
}

std::optional<std::int32_t> value_of(const Telegram& t) {
  for (const char* name : {"value", "limit", "factor"}) {
    if (auto v = field_value(t, name)) return static_cast<std::int32_t>(*v);
  }
  return std::nullopt;
}

namespace {

void push_i16(std::vector<std::uint8_t>& out, std::int32_t v) {
  auto w = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
  out.push_back(static_cast<std::uint8_t>(w >> 8));
  out.push_back(static_cast<std::uint8_t>(w & 0xff));
}

}  // namespace

Telegram make_control(std::uint8_t dst, std::uint8_t point, std::uint8_t on_off) {
  return Telegram{dst, kMtuAddress, kTypeControl, 0, {point, on_off}};
}

Telegram make_set_point(std::uint8_t type, std::uint8_t dst, std::uint8_t point,
                        std::int32_t value) {
  Telegram t{dst, kMtuAddress, type, 0, {point}};
  if (type >= kTypeDigitalSetPointLo && type <= kTypeDigitalSetPointHi) {
    t.payload.push_back(static_cast<std::uint8_t>(value));
  } else if (type == kTypeSmoothingFactor) {
    t.payload.push_back(static_cast<std::uint8_t>(value));
  } else {
    push_i16(t.payload, value);
  }
  return t;
}

Telegram make_replace(std::uint8_t dst, std::uint8_t family, std::uint8_t point,
                      std::int32_t value) {
  Telegram t{dst, kMtuAddress, kTypeReplace, 0, {family, point}};
  push_i16(t.payload, value);
  return t;
}

Telegram make_interrogation(std::uint8_t dst, std::uint8_t family, std::uint8_t point) {
  return Telegram{dst, kMtuAddress, kTypeSingleInterrogation, 0, {family, point}};
}

Telegram make_status(std::uint8_t src, std::uint8_t point, std::int32_t value) {
  Telegram t{kMtuAddress, src, kTypeStatusResponse, 0, {point}};
  push_i16(t.payload, value);
  return t;
}

Telegram make_flag_switch(std::uint8_t type, std::uint8_t dst, std::uint8_t point,
                          std::uint8_t on_off) {
  return Telegram{dst, kMtuAddress, type, 0, {point, on_off}};
}

Telegram make_empty(std::uint8_t type, std::uint8_t dst) {
  return Telegram{dst, kMtuAddress, type, 0, {}};
}

Telegram make_challenge(const std::array<std::uint8_t, 16>& nonce) {
  Telegram t{kVoidAddress, kMtuAddress, kTypeCheck, 0, {}};
  t.payload.assign(nonce.begin(), nonce.end());
  return t;
}

std::string describe(const Telegram& t) {
  std::ostringstream os;
  const Schema* s = payload_schema(t.type);
  os << "type " << int(t.type);
  if (s) os << " (" << s->name << ")";
  os << " dst " << int(t.dst) << " src " << int(t.src) << " seq " << int(t.seq);
  if (auto f = family_of(t); f && *f != t.type) os << " family " << *f;
  if (auto p = point_of(t)) os << " point " << *p;
  if (auto v = value_of(t)) os << " value " << *v;
  return os.str();
}

}  // namespace fieldguard
