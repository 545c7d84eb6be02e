#include "gridtrust/error.hpp"

#include <array>
#include <utility>

namespace gridtrust {

namespace {

constexpr std::array kNames = {
    std::pair{Errc::Ok, "Ok"},
    std::pair{Errc::Malformed, "Malformed"},
    std::pair{Errc::EmptySecret, "EmptySecret"},
    std::pair{Errc::BadSeedLength, "BadSeedLength"},
    std::pair{Errc::MalformedKey, "MalformedKey"},
    std::pair{Errc::MalformedSignature, "MalformedSignature"},
    std::pair{Errc::AuthenticationFailure, "AuthenticationFailure"},
    std::pair{Errc::NotProvisioned, "NotProvisioned"},
    std::pair{Errc::DeadlineExceeded, "DeadlineExceeded"},
    std::pair{Errc::SessionMissing, "SessionMissing"},
    std::pair{Errc::NotPending, "NotPending"},
    std::pair{Errc::SupersessionVerificationFailure, "SupersessionVerificationFailure"},
    std::pair{Errc::UnknownCommand, "UnknownCommand"},
    std::pair{Errc::DuplicateDevice, "DuplicateDevice"},
    std::pair{Errc::UnknownDevice, "UnknownDevice"},
    std::pair{Errc::ChallengeFailure, "ChallengeFailure"},
    std::pair{Errc::SupersessionFailure, "SupersessionFailure"},
    std::pair{Errc::Timeout, "Timeout"},
    std::pair{Errc::SessionBusy, "SessionBusy"},
    std::pair{Errc::UnknownSubject, "UnknownSubject"},
    std::pair{Errc::UnknownSerial, "UnknownSerial"},
    std::pair{Errc::CodeAlreadyConsumed, "CodeAlreadyConsumed"},
    std::pair{Errc::DigestMismatch, "DigestMismatch"},
    std::pair{Errc::NoEnrolledKey, "NoEnrolledKey"},
    std::pair{Errc::ReplayDetected, "ReplayDetected"},
    std::pair{Errc::SequenceGap, "SequenceGap"},
    std::pair{Errc::OutOfOrder, "OutOfOrder"},
    std::pair{Errc::DuplicateProsumer, "DuplicateProsumer"},
    std::pair{Errc::UnknownChipKey, "UnknownChipKey"},
    std::pair{Errc::MspRejected, "MspRejected"},
    std::pair{Errc::SecondFactorRejected, "SecondFactorRejected"},
    std::pair{Errc::KeyBindingMismatch, "KeyBindingMismatch"},
    std::pair{Errc::RevokedCertificate, "RevokedCertificate"},
    std::pair{Errc::MalformedBid, "MalformedBid"},
    std::pair{Errc::DuplicateBid, "DuplicateBid"},
    std::pair{Errc::NoBids, "NoBids"},
    std::pair{Errc::NotCleared, "NotCleared"},
    std::pair{Errc::UnknownProsumer, "UnknownProsumer"},
    std::pair{Errc::EndorsementMismatch, "EndorsementMismatch"},
    std::pair{Errc::OtpRejectedByDevice, "OtpRejectedByDevice"},
    std::pair{Errc::ResponseOtpInvalid, "ResponseOtpInvalid"},
    std::pair{Errc::OtpMismatch, "OtpMismatch"},
    std::pair{Errc::UnknownType, "UnknownType"},
    std::pair{Errc::BadSignature, "BadSignature"},
    std::pair{Errc::BadCode, "BadCode"},
    std::pair{Errc::ScenarioParseError, "ScenarioParseError"},
    std::pair{Errc::StepFailure, "StepFailure"},
    std::pair{Errc::FileUnreadable, "FileUnreadable"},
    std::pair{Errc::Inconsistent, "Inconsistent"},
};

}  // namespace

std::string_view to_string(Errc code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

Errc errc_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (name == n) return c;
  }
  return Errc::Malformed;
}

Error::Error(Errc code, std::string detail)
    : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                        : std::string(to_string(code)) + ": " + detail),
      code_(code) {}

}  // namespace gridtrust
