#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fieldguard/common.hpp"
#include "fieldguard/telegram.hpp"

namespace fieldguard {

enum class AgentStateKind {
  Listen,
  Start,
  CheckRule,
  VerifyCommand,
  FightBack,
  VerifyCorrection,
};

const char* to_string(AgentStateKind s);

enum class AuditKind {
  ScadaQueued,
  AuthQueued,
  CorruptDropped,
  ChannelRejected,
  ChallengeAnswered,
  StateEntered,
  Matched,
  Unmatched,
  Prohibited,
  NoActionNeeded,
  ResendSent,
  VerifySent,
  AckPositive,
  AckNegative,
  AckTimeout,
  SuspectStored,
  CorrectiveEmitted,
  ReportSent,
  ReadbackSent,
  ReadbackConfirmed,
  ReadbackMismatch,
  ReadbackTimeout,
  ShadowUpdated,
  AlarmRaised,
  CaseClosed,
};

const char* to_string(AuditKind k);

/// One line of the agent's structured audit trail. Ordering within the log
/// is the agent's processing order; times are virtual.
struct AuditRecord {
  Us t = 0;
  AgentStateKind state = AgentStateKind::Listen;
  AuditKind kind = AuditKind::StateEntered;
  int case_id = -1;  // -1 for events outside any case
  std::optional<Telegram> telegram;
  std::string detail;
};

}  // namespace fieldguard
