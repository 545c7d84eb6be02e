#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridtrust {

// Every failure the framework can report. The numeric values are part of the
// wire format (status field of chip, registrar and ledger responses), so only
// ever append.
enum class Errc : std::uint16_t {
  Ok = 0,
  Malformed,
  EmptySecret,
  BadSeedLength,
  MalformedKey,
  MalformedSignature,
  AuthenticationFailure,
  NotProvisioned,
  DeadlineExceeded,
  SessionMissing,
  NotPending,
  SupersessionVerificationFailure,
  UnknownCommand,
  DuplicateDevice,
  UnknownDevice,
  ChallengeFailure,
  SupersessionFailure,
  Timeout,
  SessionBusy,
  UnknownSubject,
  UnknownSerial,
  CodeAlreadyConsumed,
  DigestMismatch,
  NoEnrolledKey,
  ReplayDetected,
  SequenceGap,
  OutOfOrder,
  DuplicateProsumer,
  UnknownChipKey,
  MspRejected,
  SecondFactorRejected,
  KeyBindingMismatch,
  RevokedCertificate,
  MalformedBid,
  DuplicateBid,
  NoBids,
  NotCleared,
  UnknownProsumer,
  EndorsementMismatch,
  OtpRejectedByDevice,
  ResponseOtpInvalid,
  OtpMismatch,
  UnknownType,
  BadSignature,
  BadCode,
  ScenarioParseError,
  StepFailure,
  FileUnreadable,
  Inconsistent,
};

std::string_view to_string(Errc code);
// Inverse of to_string; returns Errc::Malformed for unknown names.
Errc errc_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  explicit Error(Errc code) : Error(code, std::string{}) {}
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gridtrust
