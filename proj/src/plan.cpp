#include "fieldguard/plan.hpp"

#include <map>

namespace fieldguard {

const char* to_string(Priority p) {
  switch (p) {
    case Priority::None: return "None";
    case Priority::Low: return "Low";
    case Priority::Medium: return "Medium";
    case Priority::High: return "High";
  }
  return "?";
}

const char* to_string(PlanAction a) {
  switch (a) {
    case PlanAction::None: return "NONE";
    case PlanAction::Topple: return "TOPPLE";
    case PlanAction::StoreSuspect: return "STORE_SUSPECT";
    case PlanAction::ApplyShadowViaReplace: return "APPLY_SHADOW_VIA_REPLACE";
    case PlanAction::ReportAndAwaitAck: return "REPORT_AND_AWAIT_ACK";
    case PlanAction::RevertOnNegativeAck: return "REVERT_ON_NEGATIVE_ACK";
    case PlanAction::ApplySuspectOnNegativeAck: return "APPLY_SUSPECT_ON_NEGATIVE_ACK";
    case PlanAction::ConfirmThenTopple: return "CONFIRM_THEN_TOPPLE";
    case PlanAction::ConfirmThenRestore: return "CONFIRM_THEN_RESTORE";
  }
  return "?";
}

const PlanRow& neutralization_plan(int type) {
  static const std::map<int, PlanRow> table = [] {
    std::map<int, PlanRow> m;

    const PlanRow topple_high{Priority::High,
                              {PlanAction::Topple, PlanAction::ReportAndAwaitAck,
                               PlanAction::RevertOnNegativeAck}};
    const PlanRow param_high{Priority::High,
                             {PlanAction::StoreSuspect, PlanAction::ApplyShadowViaReplace,
                              PlanAction::ReportAndAwaitAck,
                              PlanAction::ApplySuspectOnNegativeAck}};
    const PlanRow medium{Priority::Medium, {PlanAction::ConfirmThenTopple}};
    const PlanRow low_topple{Priority::Low, {PlanAction::ConfirmThenTopple}};
    const PlanRow low_restore{Priority::Low, {PlanAction::ConfirmThenRestore}};
    const PlanRow none{Priority::None, {PlanAction::None}};

    m[64] = topple_high;
    m[195] = topple_high;
    for (int t = 65; t <= 70; ++t) m[t] = param_high;
    m[205] = param_high;
    m[206] = param_high;
    m[212] = param_high;
    m[211] = medium;
    m[203] = medium;
    m[204] = medium;
    m[201] = low_topple;
    m[202] = low_topple;
    m[210] = low_topple;
    // Time and calendar settings restore from the stored parameters; the
    // remaining interrogation-control rows are toppled (a no-op for their
    // empty payloads, kept for the report trail).
    m[207] = low_restore;
    m[208] = low_restore;
    m[209] = low_restore;
    m[214] = low_topple;
    for (int t = 215; t <= 222; ++t) m[t] = low_topple;
    for (int t : {192, 193, 194, 196, 197, 198, 199, 200, 213}) m[t] = none;
    m[kTypeStatusResponse] = none;
    return m;
  }();

  auto it = table.find(type);
  static const PlanRow fallback{Priority::None, {PlanAction::None}};
  return it == table.end() ? fallback : it->second;
}

}  // namespace fieldguard
