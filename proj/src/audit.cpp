#include "fieldguard/audit.hpp"

namespace fieldguard {

const char* to_string(AgentStateKind s) {
  switch (s) {
    case AgentStateKind::Listen: return "Listen";
    case AgentStateKind::Start: return "Start";
    case AgentStateKind::CheckRule: return "CheckRule";
    case AgentStateKind::VerifyCommand: return "VerifyCommand";
    case AgentStateKind::FightBack: return "FightBack";
    case AgentStateKind::VerifyCorrection: return "VerifyCorrection";
  }
  return "?";
}

const char* to_string(AuditKind k) {
  switch (k) {
    case AuditKind::ScadaQueued: return "scada_queued";
    case AuditKind::AuthQueued: return "auth_queued";
    case AuditKind::CorruptDropped: return "corrupt_dropped";
    case AuditKind::ChannelRejected: return "channel_rejected";
    case AuditKind::ChallengeAnswered: return "challenge_answered";
    case AuditKind::StateEntered: return "state_entered";
    case AuditKind::Matched: return "matched";
    case AuditKind::Unmatched: return "unmatched";
    case AuditKind::Prohibited: return "prohibited";
    case AuditKind::NoActionNeeded: return "no_action_needed";
    case AuditKind::ResendSent: return "resend_sent";
    case AuditKind::VerifySent: return "verify_sent";
    case AuditKind::AckPositive: return "ack_positive";
    case AuditKind::AckNegative: return "ack_negative";
    case AuditKind::AckTimeout: return "ack_timeout";
    case AuditKind::SuspectStored: return "suspect_stored";
    case AuditKind::CorrectiveEmitted: return "corrective_emitted";
    case AuditKind::ReportSent: return "report_sent";
    case AuditKind::ReadbackSent: return "readback_sent";
    case AuditKind::ReadbackConfirmed: return "readback_confirmed";
    case AuditKind::ReadbackMismatch: return "readback_mismatch";
    case AuditKind::ReadbackTimeout: return "readback_timeout";
    case AuditKind::ShadowUpdated: return "shadow_updated";
    case AuditKind::AlarmRaised: return "alarm_raised";
    case AuditKind::CaseClosed: return "case_closed";
  }
  return "?";
}

}  // namespace fieldguard
