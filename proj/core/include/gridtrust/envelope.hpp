#pragma once

// OTP-authenticated envelopes exchanged between an EMS and its device agent.
// The tag is a chip MAC over the canonical binary form, never over the JSON
// text, so whitespace or key order in transit cannot change what was signed.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "gridtrust/chip.hpp"

namespace gridtrust::envelope {

inline constexpr std::string_view kEmsToDevice = "ems->dev";
inline constexpr std::string_view kDeviceToEms = "dev->ems";

enum class EnvelopeType : std::uint8_t { Query = 0, Dispatch = 1, Response = 2, Error = 3 };

std::string_view to_string(EnvelopeType t);
// Throws UnknownType.
EnvelopeType envelope_type_from_string(std::string_view s);

using Value = std::variant<std::int64_t, std::string>;
using Payload = std::map<std::string, Value>;

// u32 n || n * (lp key || u8 tag || value), keys in sorted order.
Bytes canonical_payload(const Payload& p);
Payload decode_payload(ByteView data);

std::optional<std::int64_t> get_int(const Payload& p, const std::string& key);
std::optional<std::string> get_string(const Payload& p, const std::string& key);

struct MacEnvelope {
  EnvelopeType type = EnvelopeType::Query;
  Payload message;
  std::uint64_t counter = 0;
  crypto::MacTag otp;
  std::string sender_id;

  // Bytes covered by the OTP: u8 type || lp sender || canonical payload.
  Bytes mac_message() const;

  std::string to_json() const;
  // Throws Malformed, or UnknownType for an unrecognised type field.
  static MacEnvelope from_json(std::string_view text);

  Bytes encode() const;
  static MacEnvelope decode(ByteView data);

  friend bool operator==(const MacEnvelope&, const MacEnvelope&) = default;
};

// Fills counter and otp from the chip's next MAC in `context`.
MacEnvelope seal(chip::ChipClient& chip, std::string_view context, EnvelopeType type,
                 Payload message, std::string sender_id);

}  // namespace gridtrust::envelope
