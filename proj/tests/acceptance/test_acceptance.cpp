// Acceptance suite: runs every top-level criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits non-zero on any FAIL.

#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "fieldguard/harness.hpp"
#include "fieldguard/plan.hpp"

using namespace fieldguard;

namespace {

constexpr Us kBudget = 540 * kMillisecond;

// --- shared helpers -----------------------------------------------------------

Telegram random_valid_telegram(std::mt19937_64& rng) {
  static const std::vector<int> codes = [] {
    std::vector<int> out;
    for (int c = 0; c < 256; ++c)
      if (is_valid_type(c)) out.push_back(c);
    return out;
  }();
  const int type = codes[rng() % codes.size()];
  const Schema* schema = payload_schema(type);
  const PayloadLayout& layout = schema->layouts[rng() % schema->layouts.size()];
  Telegram t;
  t.type = static_cast<std::uint8_t>(type);
  t.seq = static_cast<std::uint8_t>(rng() % 256);
  bool nonce_form = false;
  for (const auto& f : layout.fields) {
    switch (f.kind) {
      case FieldKind::U8:
        t.payload.push_back(static_cast<std::uint8_t>(
            f.min + static_cast<int>(rng() % static_cast<std::uint32_t>(f.max - f.min + 1))));
        break;
      case FieldKind::I16: {
        auto v = static_cast<std::int16_t>(rng());
        t.payload.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        t.payload.push_back(static_cast<std::uint8_t>(v & 0xff));
        break;
      }
      case FieldKind::Family: {
        static const std::vector<int> fams = [] {
          std::vector<int> out;
          for (int c = 0; c < 256; ++c)
            if (is_restorable_family(c)) out.push_back(c);
          return out;
        }();
        t.payload.push_back(static_cast<std::uint8_t>(fams[rng() % fams.size()]));
        break;
      }
      case FieldKind::Nonce:
        nonce_form = true;
        for (int i = 0; i < 16; ++i)
          t.payload.push_back(static_cast<std::uint8_t>(rng() % 256));
        break;
    }
  }
  if (t.type == kTypeStatusResponse) {
    t.dst = kMtuAddress;
    t.src = static_cast<std::uint8_t>(1 + rng() % 128);
  } else if (nonce_form) {
    t.dst = kVoidAddress;
    t.src = kMtuAddress;
  } else {
    t.dst = static_cast<std::uint8_t>(1 + rng() % 128);
    t.src = static_cast<std::uint8_t>(rng() % 129);
  }
  return t;
}

std::size_t first_audit_index(const std::vector<AuditRecord>& audit, AuditKind kind) {
  for (std::size_t i = 0; i < audit.size(); ++i)
    if (audit[i].kind == kind) return i;
  return audit.size();
}

std::vector<const AuditRecord*> audit_records(const std::vector<AuditRecord>& audit,
                                              AuditKind kind) {
  std::vector<const AuditRecord*> out;
  for (const auto& r : audit)
    if (r.kind == kind) out.push_back(&r);
  return out;
}

bool functional_equal(const RtuState& a, const RtuState& b) {
  return a.switches == b.switches && a.params == b.params && a.flags == b.flags;
}

// --- criteria ------------------------------------------------------------------

bool budget_reproduction(std::string& detail) {
  ScenarioConfig s1;
  s1.mode = ScenarioMode::S1;
  s1.cases = 200;
  s1.seed = 42;
  RunReport r1 = run_scenario(s1);

  ScenarioConfig s2;
  s2.mode = ScenarioMode::S2;
  s2.cases = 200;
  s2.seed = 42;
  RunReport r2 = run_scenario(s2);

  Us worst = 0;
  std::size_t with_response = 0;
  for (const auto* rep : {&r1, &r2}) {
    for (const auto& c : rep->cases) {
      if (c.response < 0) continue;
      ++with_response;
      worst = std::max(worst, c.response);
      if (c.response >= kBudget) {
        detail = "case over budget: " + std::to_string(c.response) + " us";
        return false;
      }
    }
  }
  if (r1.cases.size() != 200 || r2.cases.size() != 200 || with_response != 400) {
    detail = "expected 200+200 measured cases, got " + std::to_string(r1.cases.size()) +
             "+" + std::to_string(r2.cases.size()) + " (" + std::to_string(with_response) +
             " with responses)";
    return false;
  }
  if (!r1.response_stats || !r2.response_stats) {
    detail = "missing aggregates";
    return false;
  }
  if (!(r1.response_stats->mean_ms < r2.response_stats->mean_ms)) {
    detail = "scenario ordering violated";
    return false;
  }
  std::ostringstream os;
  os << "s1 mean " << r1.response_stats->mean_ms << " ms < s2 mean "
     << r2.response_stats->mean_ms << " ms; worst case " << worst << " us < " << kBudget
     << " us over 400 cases";
  detail = os.str();
  return true;
}

bool honest_run_soundness(std::string& detail) {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::Honest;
  cfg.cases = 1000;
  cfg.seed = 7;
  cfg.preset_devices = 10;
  RunReport report = run_scenario(cfg);

  if (report.counters.mtu_issued != 1000) {
    detail = "expected 1000 issued commands";
    return false;
  }
  if (report.counters.corrective_emissions != 0 || report.counters.verify_requests != 0 ||
      report.counters.resend_requests != 0 || !report.cases.empty()) {
    detail = "corrective " + std::to_string(report.counters.corrective_emissions) +
             ", verify " + std::to_string(report.counters.verify_requests) + ", resend " +
             std::to_string(report.counters.resend_requests) + ", cases " +
             std::to_string(report.cases.size());
    return false;
  }
  detail = "1000 mirrored commands across 10 devices, 0 corrective emissions, "
           "0 verification requests";
  return true;
}

struct CompletenessTarget {
  std::uint8_t type;
  Priority priority;
};

bool neutralization_completeness(std::string& detail) {
  const std::vector<CompletenessTarget> targets = {
      {64, Priority::High},  {65, Priority::High},  {66, Priority::High},
      {67, Priority::High},  {68, Priority::High},  {69, Priority::High},
      {70, Priority::High},  {195, Priority::High}, {205, Priority::High},
      {206, Priority::High}, {212, Priority::High}, {203, Priority::Medium},
      {204, Priority::Medium}, {211, Priority::Medium}};

  for (const auto& target : targets) {
    ScenarioConfig cfg;
    cfg.seed = 17;
    cfg.mtu.policy = AckPolicy::LookupByHistory;
    DeviceInit dev;
    dev.address = 5;
    dev.switches[1] = 1;
    dev.flags[{203, 1}] = 1;
    dev.flags[{204, 1}] = 1;
    dev.flags[{211, 1}] = 0;
    cfg.devices.push_back(dev);
    cfg.agents.push_back(AgentConfig{});

    // Warm-up: a mirrored, authentic command seeds the shadow store for the
    // parameter-carrying families.
    Telegram forged;
    const std::uint8_t t = target.type;
    if (t == 64) {
      forged = make_control(5, 1, 0);
    } else if (t == 195) {
      cfg.mtu_script.push_back({100 * kMillisecond, make_set_point(205, 5, 1, 400), true});
      forged = make_replace(5, 205, 1, 777);
    } else if (is_parameter_family(t)) {
      const bool byte_wide = (t >= 68 && t <= 70) || t == 206;
      cfg.mtu_script.push_back(
          {100 * kMillisecond, make_set_point(t, 5, 1, byte_wide ? 7 : 400), true});
      forged = make_set_point(t, 5, 1, byte_wide ? 30 : 777);
    } else {
      const std::uint8_t current = t == 211 ? 0 : 1;
      forged = make_flag_switch(t, 5, 1, current ^ 1);
    }
    cfg.injections.push_back({kSecond, forged});
    cfg.duration = 4 * kSecond;

    World world(cfg);
    world.run_until(kSecond - 1);
    const auto before = world.device_states();
    world.run_until(4 * kSecond);
    RunReport report = world.report();

    const std::string label = "type " + std::to_string(t);
    if (report.cases.size() != 1 || report.cases[0].outcome != "CONFIRMED") {
      detail = label + ": expected one CONFIRMED case";
      return false;
    }
    if (!functional_equal(world.device_states().at(5), before.at(5))) {
      detail = label + ": final state differs from pre-injection state";
      return false;
    }
    const auto& audit = report.audits.at(0);
    if (target.priority == Priority::High) {
      if (!(first_audit_index(audit, AuditKind::CorrectiveEmitted) <
            first_audit_index(audit, AuditKind::VerifySent))) {
        detail = label + ": corrective emission must precede the verify request";
        return false;
      }
    } else {
      const auto acks = audit_records(audit, AuditKind::AckPositive);
      const auto correctives = audit_records(audit, AuditKind::CorrectiveEmitted);
      if (acks.empty() || correctives.empty() || !(acks.front()->t <= correctives.front()->t)) {
        detail = label + ": positive acknowledgement must precede the corrective emission";
        return false;
      }
    }
  }
  detail = "14 forged types neutralized, state restored, action order per table";
  return true;
}

bool ratification_correctness(std::string& detail) {
  const std::vector<std::uint8_t> high_types = {64, 65, 66, 67, 68, 69, 70, 195, 205, 206, 212};
  for (std::uint8_t t : high_types) {
    ScenarioConfig cfg;
    cfg.seed = 23;
    cfg.mtu.policy = AckPolicy::AlwaysNegative;
    DeviceInit dev;
    dev.address = 5;
    dev.switches[1] = 1;
    cfg.devices.push_back(dev);
    cfg.agents.push_back(AgentConfig{});

    Telegram authentic;
    std::int32_t intended;
    std::uint8_t check_family = t;
    if (t == 64) {
      authentic = make_control(5, 1, 0);
      intended = 0;
    } else if (t == 195) {
      cfg.mtu_script.push_back({100 * kMillisecond, make_set_point(205, 5, 1, 400), true});
      authentic = make_replace(5, 205, 1, 555);
      intended = 555;
      check_family = 205;
    } else {
      const bool byte_wide = (t >= 68 && t <= 70) || t == 206;
      cfg.mtu_script.push_back(
          {100 * kMillisecond, make_set_point(t, 5, 1, byte_wide ? 7 : 400), true});
      authentic = make_set_point(t, 5, 1, byte_wide ? 30 : 555);
      intended = byte_wide ? 30 : 555;
    }
    cfg.mtu_script.push_back({kSecond, authentic, false});  // suppressed mirror
    cfg.duration = 4 * kSecond;

    RunReport report = run_scenario(cfg);
    const std::string label = "type " + std::to_string(t);
    if (report.cases.size() != 1 || report.cases[0].outcome != "CONFIRMED" ||
        report.cases[0].verdict != "ratified_authentic") {
      detail = label + ": expected one CONFIRMED ratified case";
      return false;
    }
    const RtuState& final_state = report.final_states.at(5);
    const std::int32_t got = final_state.readback(check_family, 1);
    if (got != intended) {
      detail = label + ": final value " + std::to_string(got) + " != intended " +
               std::to_string(intended);
      return false;
    }
    const auto correctives = audit_records(report.audits.at(0), AuditKind::CorrectiveEmitted);
    if (correctives.size() != 2) {
      detail = label + ": expected exactly two corrective emissions";
      return false;
    }
    if (t == 64) {
      if (correctives[0]->telegram->type != 64 || correctives[1]->telegram->type != 64 ||
          *value_of(*correctives[0]->telegram) != 1 ||
          *value_of(*correctives[1]->telegram) != 0) {
        detail = label + ": expected topple then topple-back";
        return false;
      }
    } else {
      // shadow-apply (replace) followed by re-applying the stored suspect
      if (correctives[0]->telegram->type != kTypeReplace ||
          correctives[1]->telegram->type != t) {
        detail = label + ": expected shadow-apply then suspect-apply";
        return false;
      }
    }
  }
  detail = "11 high-priority types ratified back to the original intent";
  return true;
}

bool codec_property_suite(std::string& detail) {
  std::mt19937_64 rng(0xc0dec);
  for (int i = 0; i < 10000; ++i) {
    Telegram t = random_valid_telegram(rng);
    auto frame = encode_telegram(t);
    if (!frame.ok()) {
      detail = "encode failed: " + describe(t);
      return false;
    }
    auto back = decode_telegram(frame.value());
    if (!back.ok() || !(back.value() == t)) {
      detail = "round trip failed: " + describe(t);
      return false;
    }
  }
  std::size_t flips = 0;
  for (int i = 0; i < 100; ++i) {
    Telegram t = random_valid_telegram(rng);
    auto frame = encode_telegram(t);
    const Frame& clean = frame.value();
    const std::size_t last_payload = clean.size() - 3;
    for (std::size_t pos = 1; pos <= last_payload; ++pos) {
      for (int bit = 0; bit < 8; ++bit) {
        Frame bad = clean;
        bad[pos] ^= static_cast<std::uint8_t>(1 << bit);
        ++flips;
        if (decode_telegram(bad).ok()) {
          detail = "accepted a corrupted frame (byte " + std::to_string(pos) + ")";
          return false;
        }
      }
    }
  }
  detail = "10000 round trips, " + std::to_string(flips) + " single-bit corruptions rejected";
  return true;
}

bool secure_channel_suite(std::string& detail) {
  const ChannelKey key = derive_channel_key(99, 1);
  std::mt19937_64 rng(0x5ec);

  // Random forgeries.
  {
    ReplayState replay;
    for (int i = 0; i < 10000; ++i) {
      std::vector<std::uint8_t> wire(15 + (rng() % 48) + 16);
      for (auto& b : wire) b = static_cast<std::uint8_t>(rng() & 0xff);
      wire[0] = 0;
      wire[1] = 0;
      wire[2] = 0;
      wire[3] = 1;
      wire[12] = static_cast<std::uint8_t>(1 + rng() % 7);
      wire[13] = 0;
      wire[14] = static_cast<std::uint8_t>(wire.size() - 31);
      if (open(key, Direction::MtuToAgent, wire, replay).ok()) {
        detail = "accepted a random forgery";
        return false;
      }
    }
  }

  // Exhaustive single-bit flips over 10 valid messages.
  std::size_t flips = 0;
  for (int m = 0; m < 10; ++m) {
    std::vector<std::uint8_t> body(8 + m);
    for (auto& b : body) b = static_cast<std::uint8_t>(rng() & 0xff);
    auto wire = seal(key, 1, Direction::MtuToAgent, static_cast<std::uint64_t>(m + 1),
                     MessageKind::AuthCopy, body);
    for (std::size_t pos = 0; pos < wire.size(); ++pos) {
      for (int bit = 0; bit < 8; ++bit) {
        auto bad = wire;
        bad[pos] ^= static_cast<std::uint8_t>(1 << bit);
        ReplayState replay;
        ++flips;
        if (open(key, Direction::MtuToAgent, bad, replay).ok()) {
          detail = "accepted a flipped sealed message";
          return false;
        }
      }
    }
    // The untouched message is accepted once and replay-rejected after.
    ReplayState replay;
    if (!open(key, Direction::MtuToAgent, wire, replay).ok()) {
      detail = "rejected a valid sealed message";
      return false;
    }
    auto replayed = open(key, Direction::MtuToAgent, wire, replay);
    if (replayed.ok() || replayed.error() != ChannelError::ReplayRejected) {
      detail = "replay was not rejected";
      return false;
    }
  }

  // Challenge-response liveness: answered while attached, removal suspected
  // within one deadline of detaching.
  ScenarioConfig cfg;
  cfg.seed = 3;
  DeviceInit dev;
  dev.address = 5;
  cfg.devices.push_back(dev);
  cfg.agents.push_back(AgentConfig{});
  cfg.mtu.challenge_period = 100 * kMillisecond;
  cfg.duration = 2 * kSecond;
  World world(cfg);
  world.run_until(350 * kMillisecond);
  if (world.mtu().stats().challenges_answered < 3 ||
      world.mtu().stats().removal_suspected != 0) {
    detail = "attached agent failed its challenges";
    return false;
  }
  world.detach_agent(0);
  // Next challenge at 400 ms; its deadline is 2*(RTT + max frame delay).
  const Us deadline = 400 * kMillisecond + 2 * (2 * 10 * kMillisecond + 20834);
  world.run_until(deadline + kMillisecond);
  if (world.mtu().stats().removal_suspected < 1) {
    detail = "removal not suspected within one challenge deadline";
    return false;
  }
  detail = std::to_string(flips) + " bit flips and 10000 forgeries rejected; replay "
           "rejected; removal detected within one deadline";
  return true;
}

bool oracle_equivalence(std::string& detail) {
  // Five authentic commands over three devices, one forged toppleable
  // command placed at every interleaving point.
  const std::vector<Telegram> authentic = {
      make_control(1, 1, 1), make_control(2, 1, 1), make_control(3, 2, 1),
      make_control(1, 1, 0), make_control(2, 2, 1)};
  const Telegram forged = make_control(2, 1, 0);

  auto initial_state = [](std::uint8_t addr) {
    RtuState st;
    st.address = addr;
    st.switches[1] = addr == 2 ? 1 : 0;
    st.switches[2] = 0;
    return st;
  };

  // Brute-force oracle: apply only the authentic commands in script order.
  std::map<std::uint8_t, RtuState> oracle;
  for (std::uint8_t a : {1, 2, 3}) oracle[a] = initial_state(a);
  for (const auto& cmd : authentic) {
    auto out = rtu_apply(oracle.at(cmd.dst), cmd);
    oracle[cmd.dst] = out.value().state;
  }

  for (std::size_t placement = 0; placement <= authentic.size(); ++placement) {
    ScenarioConfig cfg;
    cfg.seed = 31;
    cfg.mtu.policy = AckPolicy::LookupByHistory;
    for (std::uint8_t a : {1, 2, 3}) {
      DeviceInit d;
      d.address = a;
      d.switches = initial_state(a).switches;
      cfg.devices.push_back(d);
    }
    cfg.agents.push_back(AgentConfig{});

    Us t = 200 * kMillisecond;
    for (std::size_t i = 0; i < authentic.size(); ++i) {
      if (i == placement) cfg.injections.push_back({t - 100 * kMillisecond, forged});
      cfg.mtu_script.push_back({t, authentic[i], true});
      t += 200 * kMillisecond;
    }
    if (placement == authentic.size()) cfg.injections.push_back({t - 100 * kMillisecond, forged});
    cfg.duration = t + 2 * kSecond;

    RunReport report = run_scenario(cfg);
    for (std::uint8_t a : {1, 2, 3}) {
      if (report.final_states.at(a).switches != oracle.at(a).switches) {
        detail = "placement " + std::to_string(placement) + ": device " + std::to_string(a) +
                 " diverged from the authentic-only oracle";
        return false;
      }
    }
    if (report.cases.empty()) {
      detail = "placement " + std::to_string(placement) + ": forgery went unhandled";
      return false;
    }
  }
  detail = "6 interleavings match the authentic-only brute-force oracle";
  return true;
}

bool determinism(std::string& detail) {
  for (ScenarioMode mode : {ScenarioMode::S1, ScenarioMode::S2, ScenarioMode::Honest}) {
    ScenarioConfig cfg;
    cfg.mode = mode;
    cfg.cases = mode == ScenarioMode::Honest ? 200 : 50;
    cfg.seed = 42;
    const std::string a = emit_report(run_scenario(cfg), ReportFormat::Json);
    const std::string b = emit_report(run_scenario(cfg), ReportFormat::Json);
    if (a != b) {
      detail = std::string("JSON reports differ for ") + to_string(mode);
      return false;
    }
  }
  detail = "byte-identical JSON reports for s1, s2 and honest presets";
  return true;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"budget-reproduction", budget_reproduction},
      {"honest-run-soundness", honest_run_soundness},
      {"neutralization-completeness", neutralization_completeness},
      {"ratification-correctness", ratification_correctness},
      {"codec-property-suite", codec_property_suite},
      {"secure-channel-suite", secure_channel_suite},
      {"oracle-equivalence", oracle_equivalence},
      {"determinism", determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.name;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << std::endl;
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
