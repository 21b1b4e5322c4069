#include "fieldguard/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace fieldguard {

using ordered_json = nlohmann::ordered_json;

World::World(const ScenarioConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  validate_config(cfg_);
  bus_ = std::make_unique<Bus>(loop_, cfg_.bus);
  mtu_ = std::make_unique<MtuDevice>(*bus_, cfg_.mtu, rng_);

  std::vector<DeviceInit> roster = cfg_.devices;
  std::sort(roster.begin(), roster.end(),
            [](const DeviceInit& a, const DeviceInit& b) { return a.address < b.address; });
  for (const auto& d : roster) {
    RtuState st;
    st.address = d.address;
    st.switches = d.switches;
    st.params = d.params;
    st.flags = d.flags;
    rtus_.push_back(std::make_unique<RtuDevice>(*bus_, std::move(st)));
  }

  intruder_ = std::make_unique<IntruderDevice>(*bus_);

  std::uint32_t next_channel = 1;
  for (const auto& acfg : cfg_.agents) {
    auto key = derive_channel_key(cfg_.seed, next_channel);
    auto link = std::make_unique<ChannelLink>(loop_, next_channel, key, cfg_.channel_latency);
    auto agent = std::make_unique<ProtectionAgent>(*bus_, acfg);
    agent->bind_channel(link.get());
    link->bind(mtu_.get(), agent.get());
    for (const auto& [lo, hi] : acfg.partition) mtu_->add_agent_link(link.get(), lo, hi);
    links_.push_back(std::move(link));
    agents_.push_back(std::move(agent));
    ++next_channel;
  }

  mtu_->schedule_script(cfg_.mtu_script);
  intruder_->schedule_script(cfg_.injections);
  mtu_->start_challenges();

  end_time_ = cfg_.duration;
  if (end_time_ == 0) {
    Us last = 0;
    if (!cfg_.mtu_script.empty()) last = std::max(last, cfg_.mtu_script.back().at);
    for (const auto& e : cfg_.injections) last = std::max(last, e.at);
    end_time_ = last + 2 * kSecond;
  }
}

World::~World() = default;

RtuDevice& World::rtu(std::uint8_t address) {
  for (auto& r : rtus_)
    if (r->state().address == address) return *r;
  throw SimError("no RTU at address " + std::to_string(address));
}

void World::detach_agent(std::size_t i) { bus_->detach(agents_.at(i)->attachment()); }

std::map<std::uint8_t, RtuState> World::device_states() const {
  std::map<std::uint8_t, RtuState> out;
  for (const auto& r : rtus_) out[r->state().address] = r->state();
  return out;
}

RunReport World::run() {
  loop_.run_until(end_time_);
  return report();
}

RunReport World::report() {
  RunReport rep;
  rep.scenario = to_string(cfg_.mode);
  rep.seed = cfg_.seed;
  rep.duration = loop_.now();
  rep.budget = cfg_.budget;

  const auto& ms = mtu_->stats();
  rep.counters.injected = intruder_->injected();
  rep.counters.mtu_issued = ms.issued;
  rep.counters.mtu_mirrored = ms.mirrored;
  rep.counters.challenges_issued = ms.challenges_issued;
  rep.counters.challenges_answered = ms.challenges_answered;
  rep.counters.removal_suspected = ms.removal_suspected;

  std::vector<const CaseResult*> all_cases;
  for (const auto& a : agents_) {
    const auto& ac = a->counters();
    rep.counters.matched += ac.matched;
    rep.counters.resend_recoveries += ac.resend_recoveries;
    rep.counters.no_action_needed += ac.no_action_needed;
    rep.counters.corrective_emissions += ac.corrective_emissions;
    rep.counters.verify_requests += ac.verify_requests;
    rep.counters.resend_requests += ac.resend_requests;
    rep.counters.reports += ac.reports;
    rep.counters.alarms += ac.alarms;
    rep.counters.corrupt_drops += ac.corrupt_drops;
    rep.counters.channel_auth_failures += ac.channel_auth_failures;
    rep.counters.channel_replays += ac.channel_replays;
    for (const auto& c : a->cases()) all_cases.push_back(&c);
    rep.audits[a->config().id] = a->audit();
  }
  std::sort(all_cases.begin(), all_cases.end(), [](const CaseResult* a, const CaseResult* b) {
    if (a->t_arrival != b->t_arrival) return a->t_arrival < b->t_arrival;
    if (a->agent_id != b->agent_id) return a->agent_id < b->agent_id;
    return a->case_id < b->case_id;
  });

  auto authentic = [&](const Telegram& t) {
    for (const auto& e : cfg_.mtu_script)
      if (e.telegram.command_equal(t)) return true;
    return false;
  };

  std::vector<double> responses;
  int case_no = 1;
  for (const CaseResult* c : all_cases) {
    CaseRow row;
    row.case_id = case_no++;
    row.agent_id = c->agent_id;
    row.type_code = c->suspect.type;
    row.telegram = describe(c->suspect);
    row.verdict = to_string(c->verdict);
    row.outcome = to_string(c->outcome);
    row.t_inject = c->t_arrival;
    row.t_detect = c->t_detect;
    row.t_correct = c->t_first_corrective;
    row.t_correct2 = c->t_second_corrective;
    row.t_confirm = c->t_confirm;
    row.alarm = c->alarm;
    row.authentic = authentic(c->suspect);
    if (row.authentic && row.t_correct >= 0) ++rep.counters.false_positives;

    // Scenario 2 measures to the second (revert) command; everything else
    // to the first corrective emission.
    const Us end = cfg_.mode == ScenarioMode::S2 ? row.t_correct2 : row.t_correct;
    if (end >= 0 && row.t_inject >= 0) {
      row.response = end - row.t_inject;
      row.over_budget = row.response >= cfg_.budget;
      responses.push_back(static_cast<double>(row.response));
    }
    rep.cases.push_back(std::move(row));
  }

  if (!responses.empty()) {
    Aggregate agg;
    agg.count = responses.size();
    double sum = 0;
    for (double r : responses) sum += r;
    const double mean = sum / static_cast<double>(responses.size());
    double var = 0;
    for (double r : responses) var += (r - mean) * (r - mean);
    var /= static_cast<double>(responses.size());
    agg.mean_ms = std::round(mean / 10.0) / 100.0;  // microseconds -> ms, 2 dp
    agg.stddev_ms = std::round(std::sqrt(var) / 10.0) / 100.0;
    rep.response_stats = agg;
  }

  rep.final_states = device_states();
  return rep;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  World world(expand_scenario(cfg));
  return world.run();
}

// --- emission --------------------------------------------------------------------

namespace {

ordered_json telegram_json(const Telegram& t) {
  ordered_json j;
  j["dst"] = t.dst;
  j["src"] = t.src;
  j["type"] = t.type;
  j["seq"] = t.seq;
  const Schema* s = payload_schema(t.type);
  if (s) j["name"] = s->name;
  ordered_json fields = ordered_json::object();
  for (const char* name : {"family", "point", "value", "limit", "factor"}) {
    if (auto v = field_value(t, name)) fields[name] = *v;
  }
  if (!fields.empty()) j["fields"] = fields;
  if (t.type == kTypeCheck && t.payload.size() == 16) j["nonce_bytes"] = 16;
  return j;
}

ordered_json state_json(const RtuState& st) {
  ordered_json j;
  ordered_json sw = ordered_json::object();
  for (const auto& [p, v] : st.switches) sw[std::to_string(p)] = v;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : st.params)
    params[std::to_string(k.first) + "/" + std::to_string(k.second)] = v;
  ordered_json flags = ordered_json::object();
  for (const auto& [k, v] : st.flags)
    flags[std::to_string(k.first) + "/" + std::to_string(k.second)] = v;
  j["switches"] = sw;
  j["params"] = params;
  j["flags"] = flags;
  return j;
}

ordered_json audit_json(const AuditRecord& r) {
  ordered_json j;
  j["t"] = r.t;
  j["state"] = to_string(r.state);
  j["kind"] = to_string(r.kind);
  if (r.case_id >= 0) j["case"] = r.case_id;
  if (r.telegram) j["telegram"] = describe(*r.telegram);
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

std::string format_ms(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::ostringstream os;
    os << "case_id,type_code,t_inject,t_correct,t_confirm,outcome\n";
    for (const auto& c : report.cases)
      os << c.case_id << ',' << c.type_code << ',' << c.t_inject << ',' << c.t_correct
         << ',' << c.t_confirm << ',' << c.outcome << '\n';
    return os.str();
  }

  if (format == ReportFormat::Text) {
    std::ostringstream os;
    os << "scenario " << report.scenario << "  seed " << report.seed << "  duration "
       << report.duration << " us  budget " << report.budget << " us\n";
    os << "commands: issued " << report.counters.mtu_issued << " (mirrored "
       << report.counters.mtu_mirrored << "), injected " << report.counters.injected
       << ", matched " << report.counters.matched << "\n";
    os << "channel: verify " << report.counters.verify_requests << ", resend "
       << report.counters.resend_requests << " (recovered "
       << report.counters.resend_recoveries << "), reports " << report.counters.reports
       << ", alarms " << report.counters.alarms << "\n";
    os << "challenges: issued " << report.counters.challenges_issued << ", answered "
       << report.counters.challenges_answered << ", removal suspected "
       << report.counters.removal_suspected << "\n";
    if (report.response_stats) {
      os << "response time: mean " << format_ms(report.response_stats->mean_ms)
         << " ms, stddev " << format_ms(report.response_stats->stddev_ms) << " ms over "
         << report.response_stats->count << " cases\n";
    } else {
      os << "response time: n/a (no corrective cases)\n";
    }
    int flagged = 0;
    for (const auto& c : report.cases) {
      os << "case " << c.case_id << ": " << c.telegram << " -> " << c.outcome << " ("
         << c.verdict << ")";
      if (c.response >= 0) os << " response " << c.response << " us";
      if (c.over_budget) {
        os << "  ** OVER BUDGET **";
        ++flagged;
      }
      os << "\n";
    }
    os << "over budget: " << flagged << "\n";
    return os.str();
  }

  ordered_json j;
  j["scenario"] = report.scenario;
  j["seed"] = report.seed;
  j["duration_us"] = report.duration;
  j["budget_us"] = report.budget;

  ordered_json counters;
  counters["injected"] = report.counters.injected;
  counters["mtu_issued"] = report.counters.mtu_issued;
  counters["mtu_mirrored"] = report.counters.mtu_mirrored;
  counters["matched"] = report.counters.matched;
  counters["resend_recoveries"] = report.counters.resend_recoveries;
  counters["no_action_needed"] = report.counters.no_action_needed;
  counters["corrective_emissions"] = report.counters.corrective_emissions;
  counters["verify_requests"] = report.counters.verify_requests;
  counters["resend_requests"] = report.counters.resend_requests;
  counters["reports"] = report.counters.reports;
  counters["false_positives"] = report.counters.false_positives;
  counters["alarms"] = report.counters.alarms;
  counters["corrupt_drops"] = report.counters.corrupt_drops;
  counters["channel_auth_failures"] = report.counters.channel_auth_failures;
  counters["channel_replays"] = report.counters.channel_replays;
  counters["challenges_issued"] = report.counters.challenges_issued;
  counters["challenges_answered"] = report.counters.challenges_answered;
  counters["removal_suspected"] = report.counters.removal_suspected;
  j["counters"] = counters;

  if (report.response_stats) {
    ordered_json stats;
    stats["count"] = report.response_stats->count;
    stats["mean_ms"] = report.response_stats->mean_ms;
    stats["stddev_ms"] = report.response_stats->stddev_ms;
    j["response_stats"] = stats;
  } else {
    j["response_stats"] = nullptr;
  }

  ordered_json cases = ordered_json::array();
  for (const auto& c : report.cases) {
    ordered_json cj;
    cj["case_id"] = c.case_id;
    cj["agent_id"] = c.agent_id;
    cj["type_code"] = c.type_code;
    cj["telegram"] = c.telegram;
    cj["verdict"] = c.verdict;
    cj["outcome"] = c.outcome;
    cj["t_inject"] = c.t_inject;
    cj["t_detect"] = c.t_detect;
    cj["t_correct"] = c.t_correct;
    cj["t_correct2"] = c.t_correct2;
    cj["t_confirm"] = c.t_confirm;
    cj["response_us"] = c.response;
    cj["over_budget"] = c.over_budget;
    cj["alarm"] = c.alarm;
    cj["authentic"] = c.authentic;
    cases.push_back(std::move(cj));
  }
  j["cases"] = cases;

  ordered_json states = ordered_json::object();
  for (const auto& [addr, st] : report.final_states)
    states[std::to_string(addr)] = state_json(st);
  j["final_states"] = states;

  ordered_json audits = ordered_json::object();
  for (const auto& [id, records] : report.audits) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : records) arr.push_back(audit_json(r));
    audits[std::to_string(id)] = std::move(arr);
  }
  j["audits"] = audits;
  j["trace_path"] = report.trace_path;

  return j.dump(2) + "\n";
}

std::string trace_to_jsonl(const std::vector<BusEvent>& trace) {
  std::ostringstream os;
  for (const auto& ev : trace) {
    ordered_json j;
    j["t"] = ev.at;
    j["origin"] = ev.origin;
    auto decoded = decode_telegram(ev.frame);
    if (decoded.ok()) {
      j["telegram"] = telegram_json(decoded.value());
    } else {
      std::string hex;
      hex.reserve(ev.frame.size() * 2);
      static const char* digits = "0123456789abcdef";
      for (auto b : ev.frame) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0xf]);
      }
      j["raw"] = hex;
      j["error"] = to_string(decoded.error());
    }
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace fieldguard
