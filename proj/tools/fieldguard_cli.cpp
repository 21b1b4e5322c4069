#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "fieldguard/harness.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& scenario,
                std::optional<std::uint64_t> seed, const std::string& format,
                const std::string& out_path, const std::string& trace_path,
                double realtime_scale) {
  fieldguard::ScenarioConfig cfg;
  try {
    cfg = fieldguard::load_config(config_path);
  } catch (const fieldguard::SimError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  if (scenario == "s1") cfg.mode = fieldguard::ScenarioMode::S1;
  else if (scenario == "s2") cfg.mode = fieldguard::ScenarioMode::S2;
  else if (scenario == "honest") cfg.mode = fieldguard::ScenarioMode::Honest;
  if (seed) cfg.seed = *seed;

  fieldguard::RunReport report;
  std::string trace;
  try {
    fieldguard::World world(fieldguard::expand_scenario(cfg));
    if (realtime_scale > 0) {
      world.loop().set_pacing([realtime_scale](fieldguard::Us dt) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::micro>(
            static_cast<double>(dt) * realtime_scale));
      });
    }
    report = world.run();
    if (!trace_path.empty()) {
      report.trace_path = trace_path;
      trace = fieldguard::trace_to_jsonl(world.bus().trace());
    }
  } catch (const fieldguard::SimError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  auto fmt = fieldguard::ReportFormat::Json;
  if (format == "csv") fmt = fieldguard::ReportFormat::Csv;
  else if (format == "text") fmt = fieldguard::ReportFormat::Text;

  const std::string rendered = fieldguard::emit_report(report, fmt);
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return 1;
    }
    out << rendered;
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << trace_path << "\n";
      return 1;
    }
    out << trace;
  }

  for (const auto& c : report.cases)
    if (c.outcome != "CONFIRMED") return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fieldguard: detect-and-respond protection agent simulator for "
               "legacy field networks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute a scenario and emit a report");
  std::string config_path;
  std::string scenario;
  std::string format = "json";
  std::string out_path;
  std::string trace_path;
  std::optional<std::uint64_t> seed;
  double realtime_scale = 0;
  run->add_option("config", config_path, "scenario file")->required();
  run->add_option("--scenario", scenario, "preset override: s1, s2 or honest")
      ->check(CLI::IsMember({"s1", "s2", "honest"}));
  run->add_option("--seed", seed, "override the run seed");
  run->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  run->add_option("--out", out_path, "write the report here instead of stdout");
  run->add_option("--trace", trace_path, "write the bus event trace (JSON lines)");
  run->add_option("--realtime", realtime_scale,
                  "demo pacing: sleep this many wall seconds per virtual second");

  CLI11_PARSE(app, argc, argv);

  return run_command(config_path, scenario, seed, format, out_path, trace_path,
                     realtime_scale);
}
