#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fieldguard/telegram.hpp"

namespace fieldguard {

// Local rule set: pure prohibition predicates evaluated before any channel
// traffic. All verdicts are PROHIBITED, so evaluation order does not matter.
struct Rule {
  std::string id;
  std::string description;
  std::optional<std::uint8_t> type;   // restrict to one telegram type
  std::optional<std::uint8_t> dst;    // restrict to one device
  std::optional<std::uint8_t> point;  // restrict to one point
  // When set, the rule prohibits values OUTSIDE [safe_min, safe_max].
  // Without a range the rule prohibits every matching telegram outright.
  std::optional<std::int32_t> safe_min;
  std::optional<std::int32_t> safe_max;

  bool matches(const Telegram& t) const;
};

struct RuleVerdict {
  bool prohibited = false;
  std::string rule_id;
};

RuleVerdict check_rules(const Telegram& t, const std::vector<Rule>& rules);

/// Extension point for plugging in external detectors: return the reason
/// string to prohibit a telegram, nullopt to let it through.
using Detector = std::function<std::optional<std::string>(const Telegram&)>;

}  // namespace fieldguard
