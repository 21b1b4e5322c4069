#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fieldguard/agent.hpp"
#include "fieldguard/config.hpp"
#include "fieldguard/devices.hpp"

namespace fieldguard {

struct CaseRow {
  int case_id = 0;
  int agent_id = 0;
  int type_code = 0;
  std::string telegram;
  std::string verdict;
  std::string outcome;
  Us t_inject = -1;    // suspect delivery completion on the bus
  Us t_detect = -1;
  Us t_correct = -1;   // first corrective emission completion
  Us t_correct2 = -1;  // revert emission completion (ratification runs)
  Us t_confirm = -1;
  Us response = -1;    // per-scenario response time, -1 when not applicable
  bool over_budget = false;
  bool alarm = false;
  bool authentic = false;  // ground truth: the suspect was an MTU command
};

struct Aggregate {
  std::size_t count = 0;
  double mean_ms = 0;
  double stddev_ms = 0;  // population standard deviation
};

struct ReportCounters {
  std::uint64_t injected = 0;
  std::uint64_t mtu_issued = 0;
  std::uint64_t mtu_mirrored = 0;
  std::uint64_t matched = 0;
  std::uint64_t resend_recoveries = 0;
  std::uint64_t no_action_needed = 0;
  std::uint64_t corrective_emissions = 0;
  std::uint64_t verify_requests = 0;
  std::uint64_t resend_requests = 0;
  std::uint64_t reports = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t alarms = 0;
  std::uint64_t corrupt_drops = 0;
  std::uint64_t channel_auth_failures = 0;
  std::uint64_t channel_replays = 0;
  std::uint64_t challenges_issued = 0;
  std::uint64_t challenges_answered = 0;
  std::uint64_t removal_suspected = 0;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Us duration = 0;
  Us budget = 0;
  ReportCounters counters;
  std::optional<Aggregate> response_stats;  // absent (not zero) on empty runs
  std::vector<CaseRow> cases;
  std::map<std::uint8_t, RtuState> final_states;
  std::map<int, std::vector<AuditRecord>> audits;  // agent id -> audit trail
  std::string trace_path;
};

enum class ReportFormat { Json, Csv, Text };

/// Renders a completed run. JSON is byte-stable for a given report; CSV has
/// the fixed header case_id,type_code,t_inject,t_correct,t_confirm,outcome;
/// text flags every case exceeding the delay budget.
std::string emit_report(const RunReport& report, ReportFormat format);

/// Line-oriented JSON bus trace: one delivered frame per line with time,
/// origin attachment and the decoded telegram.
std::string trace_to_jsonl(const std::vector<BusEvent>& trace);

/// A fully wired simulated field network: one bus, the scripted master,
/// RTUs, an intruder and the protection agents with their channels.
class World {
public:
  explicit World(const ScenarioConfig& cfg);
  ~World();
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  void run_until(Us t) { loop_.run_until(t); }
  /// Runs the configured duration and returns the report.
  RunReport run();

  RunReport report();
  std::map<std::uint8_t, RtuState> device_states() const;

  EventLoop& loop() { return loop_; }
  Bus& bus() { return *bus_; }
  MtuDevice& mtu() { return *mtu_; }
  IntruderDevice& intruder() { return *intruder_; }
  ProtectionAgent& agent(std::size_t i = 0) { return *agents_.at(i); }
  std::size_t agent_count() const { return agents_.size(); }
  RtuDevice& rtu(std::uint8_t address);

  /// Pulls the agent off the bus (removal attack). Its channel stays up.
  void detach_agent(std::size_t i = 0);

  const ScenarioConfig& config() const { return cfg_; }

private:
  ScenarioConfig cfg_;
  EventLoop loop_;
  std::mt19937_64 rng_;
  std::unique_ptr<Bus> bus_;
  std::unique_ptr<MtuDevice> mtu_;
  std::vector<std::unique_ptr<RtuDevice>> rtus_;
  std::unique_ptr<IntruderDevice> intruder_;
  std::vector<std::unique_ptr<ChannelLink>> links_;
  std::vector<std::unique_ptr<ProtectionAgent>> agents_;
  Us end_time_ = 0;
};

/// Expands presets, assembles a world, runs it to completion and reports.
/// Deterministic: identical config and seed give a byte-identical JSON
/// report.
RunReport run_scenario(const ScenarioConfig& cfg);

}  // namespace fieldguard
