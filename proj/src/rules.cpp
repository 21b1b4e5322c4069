#include "fieldguard/rules.hpp"

namespace fieldguard {

bool Rule::matches(const Telegram& t) const {
  if (type && t.type != *type) return false;
  if (dst && t.dst != *dst) return false;
  if (point) {
    auto p = point_of(t);
    if (!p || *p != *point) return false;
  }
  if (safe_min || safe_max) {
    auto v = value_of(t);
    if (!v) return false;  // no value to range-check
    const bool below = safe_min && *v < *safe_min;
    const bool above = safe_max && *v > *safe_max;
    return below || above;
  }
  return true;
}

RuleVerdict check_rules(const Telegram& t, const std::vector<Rule>& rules) {
  for (const auto& r : rules)
    if (r.matches(t)) return {true, r.id};
  return {};
}

}  // namespace fieldguard
