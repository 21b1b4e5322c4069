#include "fieldguard/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fieldguard/plan.hpp"

namespace fieldguard {

const char* to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::Custom: return "custom";
    case ScenarioMode::S1: return "s1";
    case ScenarioMode::S2: return "s2";
    case ScenarioMode::Honest: return "honest";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(where + ": expected integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "0" || s == "no") return false;
  throw ParseError(where + ": expected on/off, got '" + s + "'");
}

std::map<std::string, std::string> parse_attrs(const std::string& s, const std::string& where) {
  std::map<std::string, std::string> out;
  for (const auto& tok : split_ws(s)) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw ParseError(where + ": expected key=value, got '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::vector<std::pair<std::uint8_t, std::uint8_t>> parse_partition(const std::string& s,
                                                                   const std::string& where) {
  if (trim(s) == "all") return {{kMinDeviceAddress, kMaxDeviceAddress}};
  std::vector<std::pair<std::uint8_t, std::uint8_t>> out;
  std::istringstream is(s);
  std::string piece;
  while (std::getline(is, piece, ',')) {
    piece = trim(piece);
    if (piece.empty()) continue;
    auto dash = piece.find('-');
    if (dash == std::string::npos) {
      auto a = parse_int(piece, where);
      out.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(a)});
    } else {
      auto lo = parse_int(piece.substr(0, dash), where);
      auto hi = parse_int(piece.substr(dash + 1), where);
      out.push_back({static_cast<std::uint8_t>(lo), static_cast<std::uint8_t>(hi)});
    }
  }
  if (out.empty()) throw ParseError(where + ": empty partition");
  return out;
}

Rule parse_rule(const std::string& s, const std::string& where) {
  Rule r;
  for (const auto& [k, v] : parse_attrs(s, where)) {
    if (k == "id") r.id = v;
    else if (k == "describe") r.description = v;
    else if (k == "type") r.type = static_cast<std::uint8_t>(parse_int(v, where));
    else if (k == "dst") r.dst = static_cast<std::uint8_t>(parse_int(v, where));
    else if (k == "point") r.point = static_cast<std::uint8_t>(parse_int(v, where));
    else if (k == "min") r.safe_min = static_cast<std::int32_t>(parse_int(v, where));
    else if (k == "max") r.safe_max = static_cast<std::int32_t>(parse_int(v, where));
    else throw ParseError(where + ": unknown rule attribute '" + k + "'");
  }
  if (r.id.empty()) throw ParseError(where + ": rule needs id=");
  return r;
}

struct ParsedCommand {
  Us at = 0;
  Telegram telegram;
  bool mirror = true;
};

ParsedCommand parse_command(const std::string& s, const std::string& where) {
  ParsedCommand cmd;
  std::optional<int> type, dst, point, value, family;
  for (const auto& [k, v] : parse_attrs(s, where)) {
    if (k == "at") cmd.at = parse_int(v, where);
    else if (k == "type") type = static_cast<int>(parse_int(v, where));
    else if (k == "dst") dst = static_cast<int>(parse_int(v, where));
    else if (k == "point") point = static_cast<int>(parse_int(v, where));
    else if (k == "value") value = static_cast<int>(parse_int(v, where));
    else if (k == "family") family = static_cast<int>(parse_int(v, where));
    else if (k == "mirror") cmd.mirror = parse_bool(v, where);
    else throw ParseError(where + ": unknown command attribute '" + k + "'");
  }
  if (!type || !dst) throw ParseError(where + ": command needs type= and dst=");

  const std::uint8_t d = static_cast<std::uint8_t>(*dst);
  const std::uint8_t t = static_cast<std::uint8_t>(*type);
  const std::uint8_t p = static_cast<std::uint8_t>(point.value_or(0));
  if (t == kTypeControl) {
    cmd.telegram = make_control(d, p, static_cast<std::uint8_t>(value.value_or(0)));
  } else if (t == kTypeReplace) {
    if (!family) throw ParseError(where + ": replace command needs family=");
    cmd.telegram = make_replace(d, static_cast<std::uint8_t>(*family), p, value.value_or(0));
  } else if (t == kTypeSingleInterrogation || t == kTypeGroupInterrogation) {
    if (!family) throw ParseError(where + ": interrogation needs family=");
    cmd.telegram = make_interrogation(d, static_cast<std::uint8_t>(*family), p);
    cmd.telegram.type = t;
  } else if (is_parameter_family(t)) {
    cmd.telegram = make_set_point(t, d, p, value.value_or(0));
  } else if (is_flag_family(t)) {
    cmd.telegram = make_flag_switch(t, d, p, static_cast<std::uint8_t>(value.value_or(0)));
  } else {
    cmd.telegram = make_empty(t, d);
  }
  if (auto err = validate_telegram(cmd.telegram))
    throw ParseError(where + ": invalid telegram (" + to_string(*err) + ")");
  return cmd;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  DeviceInit* device = nullptr;
  AgentConfig* agent = nullptr;
  int lineno = 0;

  auto where = [&](const std::string& key) {
    return "[" + section + "] " + key + " (line " + std::to_string(lineno) + ")";
  };

  while (std::getline(is, raw)) {
    ++lineno;
    auto comment = raw.find('#');
    if (comment != std::string::npos) raw.erase(comment);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("line " + std::to_string(lineno) + ": unclosed section");
      section = trim(line.substr(1, line.size() - 2));
      device = nullptr;
      agent = nullptr;
      if (section == "device") {
        cfg.devices.emplace_back();
        device = &cfg.devices.back();
      } else if (section == "agent") {
        cfg.agents.emplace_back();
        cfg.agents.back().id = static_cast<int>(cfg.agents.size()) - 1;
        agent = &cfg.agents.back();
      } else if (section != "bus" && section != "channel" && section != "run" &&
                 section != "scenario" && section != "mtu" && section != "inject") {
        throw ParseError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      }
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (section == "bus") {
      if (key == "baud") cfg.bus.baud = static_cast<int>(parse_int(val, where(key)));
      else if (key == "propagation_us") cfg.bus.propagation_us = parse_int(val, where(key));
      else throw ParseError(where(key) + ": unknown key");
    } else if (section == "channel") {
      if (key == "latency_us") cfg.channel_latency = parse_int(val, where(key));
      else throw ParseError(where(key) + ": unknown key");
    } else if (section == "run") {
      if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(val, where(key)));
      else if (key == "duration_us") cfg.duration = parse_int(val, where(key));
      else if (key == "budget_us") cfg.budget = parse_int(val, where(key));
      else throw ParseError(where(key) + ": unknown key");
    } else if (section == "scenario") {
      if (key == "mode") {
        if (val == "custom") cfg.mode = ScenarioMode::Custom;
        else if (val == "s1") cfg.mode = ScenarioMode::S1;
        else if (val == "s2") cfg.mode = ScenarioMode::S2;
        else if (val == "honest") cfg.mode = ScenarioMode::Honest;
        else throw ParseError(where(key) + ": unknown mode '" + val + "'");
      } else if (key == "cases") cfg.cases = static_cast<int>(parse_int(val, where(key)));
      else if (key == "spacing_us") cfg.case_spacing = parse_int(val, where(key));
      else if (key == "devices") cfg.preset_devices = static_cast<int>(parse_int(val, where(key)));
      else throw ParseError(where(key) + ": unknown key");
    } else if (section == "device") {
      if (key == "address") device->address = static_cast<std::uint8_t>(parse_int(val, where(key)));
      else if (key == "switch") {
        auto toks = split_ws(val);
        if (toks.size() != 2) throw ParseError(where(key) + ": expected 'point value'");
        device->switches[static_cast<std::uint8_t>(parse_int(toks[0], where(key)))] =
            static_cast<std::uint8_t>(parse_int(toks[1], where(key)));
      } else if (key == "param" || key == "flag") {
        auto toks = split_ws(val);
        if (toks.size() != 3) throw ParseError(where(key) + ": expected 'family point value'");
        auto fam = static_cast<std::uint8_t>(parse_int(toks[0], where(key)));
        auto pt = static_cast<std::uint8_t>(parse_int(toks[1], where(key)));
        auto v = parse_int(toks[2], where(key));
        if (key == "param") device->params[{fam, pt}] = static_cast<std::int16_t>(v);
        else device->flags[{fam, pt}] = static_cast<std::uint8_t>(v);
      } else throw ParseError(where(key) + ": unknown key");
    } else if (section == "agent") {
      if (key == "id") agent->id = static_cast<int>(parse_int(val, where(key)));
      else if (key == "partition") agent->partition = parse_partition(val, where(key));
      else if (key == "match_window_us") agent->match_window = parse_int(val, where(key));
      else if (key == "verify_grace_us") agent->verify_grace = parse_int(val, where(key));
      else if (key == "ack_timeout_us") agent->ack_timeout = parse_int(val, where(key));
      else if (key == "readback_timeout_us") agent->readback_timeout = parse_int(val, where(key));
      else if (key == "readback_retries") agent->readback_retries = static_cast<int>(parse_int(val, where(key)));
      else if (key == "rule") agent->rules.push_back(parse_rule(val, where(key)));
      else throw ParseError(where(key) + ": unknown key");
    } else if (section == "mtu") {
      if (key == "ack_policy") {
        if (val == "always-positive") cfg.mtu.policy = AckPolicy::AlwaysPositive;
        else if (val == "always-negative") cfg.mtu.policy = AckPolicy::AlwaysNegative;
        else if (val == "lookup-by-history" || val == "lookup") cfg.mtu.policy = AckPolicy::LookupByHistory;
        else if (val == "silent") cfg.mtu.policy = AckPolicy::Silent;
        else throw ParseError(where(key) + ": unknown policy '" + val + "'");
      } else if (key == "history_window_us") cfg.mtu.history_window = parse_int(val, where(key));
      else if (key == "challenge_period_us") cfg.mtu.challenge_period = parse_int(val, where(key));
      else if (key == "challenge_deadline_us") cfg.mtu.challenge_deadline = parse_int(val, where(key));
      else if (key == "command") {
        auto c = parse_command(val, where(key));
        cfg.mtu_script.push_back({c.at, c.telegram, c.mirror});
      } else throw ParseError(where(key) + ": unknown key");
    } else if (section == "inject") {
      if (key == "command") {
        auto c = parse_command(val, where(key));
        cfg.injections.push_back({c.at, c.telegram});
      } else throw ParseError(where(key) + ": unknown key");
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": key outside any section");
    }
  }
  return cfg;
}

void validate_config(const ScenarioConfig& cfg) {
  if (cfg.bus.baud < 1200 || cfg.bus.baud > 19200)
    throw ValidationError("[bus] baud: " + std::to_string(cfg.bus.baud) +
                          " outside 1200..19200");
  if (cfg.channel_latency < 0) throw ValidationError("[channel] latency_us: negative");

  std::set<std::uint8_t> roster;
  for (const auto& d : cfg.devices) {
    if (d.address < kMinDeviceAddress || d.address > kMaxDeviceAddress)
      throw ValidationError("[device] address " + std::to_string(d.address) +
                            ": outside 1..128");
    if (!roster.insert(d.address).second)
      throw ValidationError("[device] address " + std::to_string(d.address) + ": duplicate");
  }

  const bool preset = cfg.mode != ScenarioMode::Custom;
  if (!preset || !cfg.devices.empty()) {
    // Partitions must cover every roster device exactly once.
    for (auto addr : roster) {
      int owners = 0;
      for (const auto& a : cfg.agents)
        for (const auto& [lo, hi] : a.partition)
          if (addr >= lo && addr <= hi) ++owners;
      if (!cfg.agents.empty() && owners == 0)
        throw ValidationError("[agent] partition: device " + std::to_string(addr) +
                              " not covered by any partition");
      if (owners > 1)
        throw ValidationError("[agent] partition: device " + std::to_string(addr) +
                              " covered by " + std::to_string(owners) + " partitions");
    }
  }

  Us prev = 0;
  for (std::size_t i = 0; i < cfg.mtu_script.size(); ++i) {
    const auto& e = cfg.mtu_script[i];
    if (e.at < prev)
      throw ValidationError("[mtu] command " + std::to_string(i) +
                            ": issue times must be non-decreasing");
    prev = e.at;
    if (e.telegram.dst != kVoidAddress && !roster.count(e.telegram.dst) && !preset)
      throw ValidationError("[mtu] command " + std::to_string(i) + ": dst " +
                            std::to_string(e.telegram.dst) + " not in device roster");
  }
  for (std::size_t i = 0; i < cfg.injections.size(); ++i) {
    const auto& e = cfg.injections[i];
    if (!roster.count(e.telegram.dst) && !preset)
      throw ValidationError("[inject] command " + std::to_string(i) + ": dst " +
                            std::to_string(e.telegram.dst) + " not in device roster");
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ScenarioConfig cfg = parse_config(buf.str());
  validate_config(cfg);
  return cfg;
}

// --- preset expansion -----------------------------------------------------------

namespace {

constexpr std::uint8_t kHighFamilies[] = {64, 65, 66, 67, 68, 69, 70, 195, 205, 206, 212};

std::int32_t base_value(std::uint8_t family) {
  switch (family) {
    case 64: return 1;
    case 65: case 66: case 67: return 1200;
    case 68: case 69: case 70: return 7;
    case 205: return 400;
    case 206: return 3;
    case 212: return 250;
    default: return 1;
  }
}

Telegram family_command(std::uint8_t family, std::uint8_t dst, std::uint8_t point,
                        std::int32_t value) {
  if (family == kTypeControl) return make_control(dst, point, static_cast<std::uint8_t>(value));
  if (is_flag_family(family))
    return make_flag_switch(family, dst, point, static_cast<std::uint8_t>(value));
  return make_set_point(family, dst, point, value);
}

}  // namespace

ScenarioConfig expand_scenario(const ScenarioConfig& in) {
  if (in.mode == ScenarioMode::Custom) return in;

  ScenarioConfig cfg = in;
  std::mt19937_64 rng(cfg.seed);

  if (cfg.cases <= 0) cfg.cases = cfg.mode == ScenarioMode::Honest ? 1000 : 200;
  if (cfg.devices.empty()) {
    const int n = std::max(1, cfg.preset_devices);
    for (int i = 0; i < n; ++i) {
      DeviceInit d;
      d.address = static_cast<std::uint8_t>(i + 1);
      cfg.devices.push_back(d);
    }
  }
  if (cfg.agents.empty()) cfg.agents.push_back(AgentConfig{});
  // Presets measure the comparison-based defence path; local rules would
  // short-circuit cases into the prohibited path and skew the timings.
  for (auto& a : cfg.agents) {
    a.rules.clear();
    a.detector = nullptr;
  }

  auto pick_device = [&]() {
    return cfg.devices[rng() % cfg.devices.size()].address;
  };

  cfg.mtu_script.clear();
  cfg.injections.clear();

  if (cfg.mode == ScenarioMode::Honest) {
    cfg.mtu.policy = AckPolicy::LookupByHistory;
    // Randomized authentic traffic across the whole control-direction set.
    static const std::uint8_t kHonestTypes[] = {64,  65,  66,  67,  68,  69,  70, 192,
                                                193, 196, 197, 198, 201, 203, 205, 206,
                                                207, 210, 211, 212, 213, 215};
    Us t = 100 * kMillisecond;
    for (int i = 0; i < cfg.cases; ++i) {
      const std::uint8_t type = kHonestTypes[rng() % std::size(kHonestTypes)];
      const std::uint8_t dst = pick_device();
      const std::uint8_t point = static_cast<std::uint8_t>(1 + rng() % 3);
      Telegram t_cmd;
      if (type == kTypeControl) {
        t_cmd = make_control(dst, point, static_cast<std::uint8_t>(rng() % 2));
      } else if (type == kTypeSingleInterrogation || type == kTypeGroupInterrogation) {
        t_cmd = make_interrogation(dst, 64, point);
        t_cmd.type = type;
      } else if (is_parameter_family(type)) {
        const bool byte_wide = (type >= kTypeDigitalSetPointLo && type <= kTypeDigitalSetPointHi) ||
                               type == kTypeSmoothingFactor;
        t_cmd = make_set_point(type, dst, point,
                               byte_wide ? static_cast<std::int32_t>(rng() % 256)
                                         : static_cast<std::int32_t>(rng() % 2000) - 1000);
      } else if (is_flag_family(type)) {
        t_cmd = make_flag_switch(type, dst, point, static_cast<std::uint8_t>(rng() % 2));
      } else {
        t_cmd = make_empty(type, dst);
      }
      cfg.mtu_script.push_back({t, t_cmd, true});
      t += 20 * kMillisecond + static_cast<Us>(rng() % 60) * kMillisecond;
    }
    if (cfg.duration == 0) cfg.duration = t + 2 * kSecond;
    return cfg;
  }

  // s1 / s2: pick the per-case targets first, then warm up exactly the
  // (device, family, point) cells the cases will touch so the shadow store
  // holds confirmed values.
  struct Case {
    std::uint8_t device, family, point;
    std::int32_t forged;
  };
  std::vector<Case> case_list;
  std::set<std::tuple<std::uint8_t, std::uint8_t, std::uint8_t>> warm_cells;
  for (int i = 0; i < cfg.cases; ++i) {
    Case c;
    c.device = pick_device();
    c.family = kHighFamilies[rng() % std::size(kHighFamilies)];
    c.point = static_cast<std::uint8_t>(1 + rng() % 2);
    const std::uint8_t warm_family = c.family == kTypeReplace ? kTypeThresholdLimit : c.family;
    warm_cells.insert({c.device, warm_family, c.point});
    if (warm_family == kTypeControl) {
      c.forged = 0;  // warm-up leaves switches ON; the forgery trips them
    } else {
      const bool byte_wide =
          (warm_family >= kTypeDigitalSetPointLo && warm_family <= kTypeDigitalSetPointHi) ||
          warm_family == kTypeSmoothingFactor;
      const std::int32_t delta = 1 + static_cast<std::int32_t>(rng() % (byte_wide ? 90 : 900));
      c.forged = base_value(warm_family) + delta;
      if (byte_wide) c.forged &= 0xff;
      if (c.forged == base_value(warm_family)) ++c.forged;
    }
    case_list.push_back(c);
  }

  Us t = 100 * kMillisecond;
  for (const auto& [device, family, point] : warm_cells) {
    cfg.mtu_script.push_back({t, family_command(family, device, point, base_value(family)), true});
    t += 50 * kMillisecond;
  }
  Us case_start = t + 500 * kMillisecond;

  cfg.mtu.policy = cfg.mode == ScenarioMode::S1 ? AckPolicy::Silent : AckPolicy::AlwaysNegative;
  for (const auto& c : case_list) {
    Telegram cmd = c.family == kTypeReplace
                       ? make_replace(c.device, kTypeThresholdLimit, c.point, c.forged)
                       : family_command(c.family, c.device, c.point, c.forged);
    if (cfg.mode == ScenarioMode::S1) {
      cfg.injections.push_back({case_start, cmd});
    } else {
      // Scenario 2: the command is authentic but its mirror is suppressed,
      // so the agent first neutralizes it and must then switch it back.
      cfg.mtu_script.push_back({case_start, cmd, false});
    }
    case_start += cfg.case_spacing;
  }
  if (cfg.duration == 0) cfg.duration = case_start + 2 * kSecond;
  return cfg;
}

}  // namespace fieldguard
