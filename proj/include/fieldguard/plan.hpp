#pragma once

#include <vector>

#include "fieldguard/telegram.hpp"

namespace fieldguard {

enum class Priority { None, Low, Medium, High };

enum class PlanAction : std::uint8_t {
  None = 0,
  Topple,                     // re-issue a two-state command in the opposite direction
  StoreSuspect,               // keep a copy of the suspected command
  ApplyShadowViaReplace,      // replace command carrying the last confirmed value
  ReportAndAwaitAck,          // report the action, await master acknowledgement
  RevertOnNegativeAck,        // negative ack: topple the command back
  ApplySuspectOnNegativeAck,  // negative ack: re-apply the stored suspect
  ConfirmThenTopple,          // report first; topple only on confirmation
  ConfirmThenRestore,         // report first; restore stored parameters on confirmation
};

const char* to_string(Priority p);
const char* to_string(PlanAction a);

struct PlanRow {
  Priority priority = Priority::None;
  std::vector<PlanAction> actions;

  bool confirm_first() const { return priority == Priority::Medium || priority == Priority::Low; }
};

/// Per-type neutralization plan for every control-direction telegram type.
/// High-priority rows act first and reconcile with the master afterwards;
/// Medium/Low rows act only on confirmation; None rows need no correction.
const PlanRow& neutralization_plan(int type);

}  // namespace fieldguard
