#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "fieldguard/harness.hpp"

using namespace fieldguard;

namespace {

const char* kMinimalConfig = R"(
# one device, one agent, one injection
[run]
seed = 7

[device]
address = 5
switch = 1 1

[agent]
partition = all

[inject]
command = at=50000 type=64 dst=5 point=1 value=0
)";

}  // namespace

TEST_CASE("minimal config parses and validates") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  validate_config(cfg);
  CHECK(cfg.seed == 7);
  REQUIRE(cfg.devices.size() == 1);
  CHECK(cfg.devices[0].address == 5);
  CHECK(cfg.devices[0].switches.at(1) == 1);
  REQUIRE(cfg.injections.size() == 1);
  CHECK(cfg.injections[0].at == 50000);
  CHECK(cfg.injections[0].telegram.type == 64);
}

TEST_CASE("validation names the uncovered device") {
  const char* text = R"(
[device]
address = 5
[device]
address = 7
[agent]
partition = 5
)";
  ScenarioConfig cfg = parse_config(text);
  try {
    validate_config(cfg);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("device 7") != std::string::npos);
  }
}

TEST_CASE("validation rejects duplicate device addresses") {
  const char* text = R"(
[device]
address = 5
[device]
address = 5
)";
  ScenarioConfig cfg = parse_config(text);
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
}

TEST_CASE("validation rejects overlapping partitions and bad script addresses") {
  {
    ScenarioConfig cfg = parse_config(R"(
[device]
address = 5
[agent]
partition = 1-10
[agent]
partition = 5
)");
    CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  }
  {
    ScenarioConfig cfg = parse_config(R"(
[device]
address = 5
[inject]
command = at=0 type=64 dst=9 point=1 value=0
)");
    CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  }
  {
    ScenarioConfig cfg = parse_config(R"(
[device]
address = 5
[mtu]
command = at=1000 type=64 dst=5 point=1 value=1
command = at=500 type=64 dst=5 point=1 value=0
)");
    CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  }
}

TEST_CASE("parser reports malformed input") {
  CHECK_THROWS_AS(parse_config("[bus\nbaud = 19200\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[bus]\nbaud 19200\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[bus]\nwat = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[nonsense]\n"), ParseError);
  CHECK_THROWS_AS(parse_config("key = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[inject]\ncommand = at=0 type=64\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[bus]\nbaud = fast\n"), ParseError);
}

TEST_CASE("custom run: injected command is neutralized and reported") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  RunReport report = run_scenario(cfg);

  REQUIRE(report.cases.size() == 1);
  CHECK(report.cases[0].outcome == "CONFIRMED");
  CHECK(report.cases[0].type_code == 64);
  CHECK_FALSE(report.cases[0].authentic);
  CHECK(report.final_states.at(5).switches.at(1) == 1);
  REQUIRE(report.response_stats.has_value());
  CHECK(report.response_stats->count == 1);
  CHECK(report.cases[0].response > 0);
  CHECK_FALSE(report.cases[0].over_budget);
}

TEST_CASE("scenario 1 preset: every case neutralized and confirmed") {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::S1;
  cfg.cases = 12;
  cfg.seed = 11;
  cfg.preset_devices = 4;
  RunReport report = run_scenario(cfg);

  REQUIRE(report.cases.size() == 12);
  for (const auto& c : report.cases) {
    CHECK(c.outcome == "CONFIRMED");
    CHECK(c.response >= 0);
    CHECK_FALSE(c.over_budget);
  }
  CHECK(report.counters.injected == 12);
  CHECK(report.counters.false_positives == 0);
  REQUIRE(report.response_stats.has_value());
  CHECK(report.response_stats->count == 12);
}

TEST_CASE("scenario 2 preset: final states equal the commands' intent") {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::S2;
  cfg.cases = 12;
  cfg.seed = 13;
  cfg.preset_devices = 4;

  const ScenarioConfig expanded = expand_scenario(cfg);
  // Ground truth: apply only the authentic commands in script order.
  std::map<std::uint8_t, RtuState> oracle;
  for (const auto& d : expanded.devices) {
    RtuState st;
    st.address = d.address;
    oracle[d.address] = st;
  }
  for (const auto& e : expanded.mtu_script) {
    auto out = rtu_apply(oracle.at(e.telegram.dst), e.telegram);
    REQUIRE(out.ok());
    oracle[e.telegram.dst] = out.value().state;
  }

  World world(expanded);
  RunReport report = world.run();

  REQUIRE(report.cases.size() == 12);
  for (const auto& c : report.cases) {
    CHECK(c.outcome == "CONFIRMED");
    CHECK(c.verdict == "ratified_authentic");
    CHECK(c.t_correct2 > c.t_correct);
    CHECK(c.response >= 0);
    CHECK(c.authentic);
  }
  CHECK(report.counters.false_positives == 12);
  for (const auto& [addr, oracle_state] : oracle) {
    const RtuState& got = report.final_states.at(addr);
    CHECK(got.switches == oracle_state.switches);
    CHECK(got.params == oracle_state.params);
    CHECK(got.flags == oracle_state.flags);
  }
}

TEST_CASE("honest preset: zero corrective traffic, aggregates absent") {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::Honest;
  cfg.cases = 80;
  cfg.seed = 3;
  RunReport report = run_scenario(cfg);

  CHECK(report.cases.empty());
  CHECK(report.counters.corrective_emissions == 0);
  CHECK(report.counters.verify_requests == 0);
  CHECK(report.counters.resend_requests == 0);
  CHECK(report.counters.false_positives == 0);
  CHECK_FALSE(report.response_stats.has_value());

  const std::string json = emit_report(report, ReportFormat::Json);
  CHECK(json.find("\"response_stats\": null") != std::string::npos);
  const std::string text = emit_report(report, ReportFormat::Text);
  CHECK(text.find("n/a") != std::string::npos);
}

TEST_CASE("reports are byte-identical across runs with the same seed") {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::S1;
  cfg.cases = 6;
  cfg.seed = 99;
  cfg.preset_devices = 3;
  const std::string a = emit_report(run_scenario(cfg), ReportFormat::Json);
  const std::string b = emit_report(run_scenario(cfg), ReportFormat::Json);
  CHECK(a == b);

  cfg.seed = 100;
  const std::string c = emit_report(run_scenario(cfg), ReportFormat::Json);
  CHECK(a != c);
}

TEST_CASE("csv format honours the fixed header contract") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  RunReport report = run_scenario(cfg);
  const std::string csv = emit_report(report, ReportFormat::Csv);
  CHECK(csv.rfind("case_id,type_code,t_inject,t_correct,t_confirm,outcome\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one case
  CHECK(csv.find(",64,") != std::string::npos);
  CHECK(csv.find(",CONFIRMED") != std::string::npos);
}

TEST_CASE("text format flags cases over the budget") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  RunReport report = run_scenario(cfg);
  CHECK(emit_report(report, ReportFormat::Text).find("OVER BUDGET") == std::string::npos);

  // Shrink the budget below any achievable response to force a flag.
  report.cases[0].over_budget = true;
  CHECK(emit_report(report, ReportFormat::Text).find("OVER BUDGET") != std::string::npos);
}

TEST_CASE("bus trace exports one JSON line per delivered frame") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  World world(expand_scenario(cfg));
  world.run();
  const std::string trace = trace_to_jsonl(world.bus().trace());
  const auto lines = static_cast<std::size_t>(std::count(trace.begin(), trace.end(), '\n'));
  CHECK(lines == world.bus().trace().size());
  CHECK(lines >= 4);  // injection, topple, interrogation, status
  CHECK(trace.find("\"telegram\"") != std::string::npos);
}

TEST_CASE("partitioned agents: every address handled by exactly one agent") {
  ScenarioConfig cfg;
  cfg.seed = 21;
  for (std::uint8_t a = 1; a <= 10; ++a) {
    DeviceInit d;
    d.address = a;
    d.switches[1] = 1;
    cfg.devices.push_back(d);
  }
  AgentConfig left;
  left.id = 0;
  left.partition = {{1, 5}};
  AgentConfig right;
  right.id = 1;
  right.partition = {{6, 10}};
  cfg.agents = {left, right};
  cfg.mtu.policy = AckPolicy::Silent;
  for (std::uint8_t a = 1; a <= 10; ++a)
    cfg.injections.push_back({a * 100 * kMillisecond, make_control(a, 1, 0)});
  RunReport report = run_scenario(cfg);

  REQUIRE(report.cases.size() == 10);
  std::set<int> agents_used;
  for (const auto& c : report.cases) {
    CHECK(c.outcome == "CONFIRMED");
    agents_used.insert(c.agent_id);
  }
  CHECK(agents_used == std::set<int>{0, 1});
  for (std::uint8_t a = 1; a <= 10; ++a)
    CHECK(report.final_states.at(a).switches.at(1) == 1);
  // Exactly one corrective per injection: no double handling.
  CHECK(report.counters.corrective_emissions == 10);
}

TEST_CASE("challenge-response runs periodically inside a scenario") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  cfg.mtu.challenge_period = 100 * kMillisecond;
  cfg.duration = kSecond;
  RunReport report = run_scenario(cfg);
  CHECK(report.counters.challenges_issued >= 8);
  // The final challenge can still be in flight when the run ends.
  CHECK(report.counters.challenges_answered >= report.counters.challenges_issued - 1);
  CHECK(report.counters.removal_suspected == 0);
}

TEST_CASE("detaching the agent mid-run raises removal suspicion") {
  ScenarioConfig cfg = parse_config(kMinimalConfig);
  cfg.injections.clear();
  cfg.mtu.challenge_period = 100 * kMillisecond;
  World world(expand_scenario(cfg));
  world.run_until(450 * kMillisecond);
  CHECK(world.mtu().stats().removal_suspected == 0);
  world.detach_agent(0);
  world.run_until(kSecond);
  CHECK(world.mtu().stats().removal_suspected >= 1);
  CHECK(world.mtu().stats().challenges_answered >= 1);
}

TEST_CASE("expansion is deterministic for a given seed") {
  ScenarioConfig cfg;
  cfg.mode = ScenarioMode::S1;
  cfg.cases = 20;
  cfg.seed = 5;
  auto a = expand_scenario(cfg);
  auto b = expand_scenario(cfg);
  REQUIRE(a.injections.size() == b.injections.size());
  for (std::size_t i = 0; i < a.injections.size(); ++i) {
    CHECK(a.injections[i].at == b.injections[i].at);
    CHECK(a.injections[i].telegram == b.injections[i].telegram);
  }
}
