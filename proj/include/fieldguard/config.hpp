#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fieldguard/agent.hpp"
#include "fieldguard/bus.hpp"
#include "fieldguard/devices.hpp"

namespace fieldguard {

/// Thrown when a scenario file cannot be tokenized.
class ParseError : public SimError {
public:
  explicit ParseError(const std::string& what) : SimError("ParseError: " + what) {}
};

/// Thrown when a parsed scenario violates an invariant; the message names
/// the offending section/field.
class ValidationError : public SimError {
public:
  explicit ValidationError(const std::string& what) : SimError("ValidationError: " + what) {}
};

enum class ScenarioMode { Custom, S1, S2, Honest };

const char* to_string(ScenarioMode m);

struct DeviceInit {
  std::uint8_t address = 0;
  std::map<std::uint8_t, std::uint8_t> switches;
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::int16_t> params;
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::uint8_t> flags;
};

struct ScenarioConfig {
  BusConfig bus;
  Us channel_latency = 10 * kMillisecond;
  std::uint64_t seed = 1;
  Us duration = 0;                  // 0: run to the last scripted event + grace
  Us budget = 540 * kMillisecond;   // tolerable transaction delay
  ScenarioMode mode = ScenarioMode::Custom;
  int cases = 0;                    // preset case count (s1/s2/honest)
  Us case_spacing = 300 * kMillisecond;
  int preset_devices = 10;          // synthesized roster size for presets
  std::vector<DeviceInit> devices;
  std::vector<AgentConfig> agents;
  MtuConfig mtu;
  std::vector<MtuScriptEntry> mtu_script;
  std::vector<InjectionEntry> injections;
};

/// Parses the line-oriented section/key-value scenario format documented in
/// docs/config_format.md. Throws ParseError on bad syntax.
ScenarioConfig parse_config(const std::string& text);

/// Checks cross-field invariants: address ranges, roster coverage by
/// partitions, script addresses, script ordering. Throws ValidationError.
void validate_config(const ScenarioConfig& cfg);

/// parse + validate from a file path.
ScenarioConfig load_config(const std::string& path);

/// Fills in preset scenarios (s1, s2, honest): synthesizes a roster when none
/// is given, a mirrored warm-up phase that seeds the shadow store, and the
/// per-case scripts. Custom configs pass through untouched. Deterministic in
/// cfg.seed.
ScenarioConfig expand_scenario(const ScenarioConfig& cfg);

}  // namespace fieldguard
