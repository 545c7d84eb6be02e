#pragma once

// Gateway in front of a legacy inverter. Every inbound envelope is checked
// on the agent's own chip before anything touches the registers; replies
// carry a fresh OTP from the same chip.

#include <cstdint>
#include <string>

#include "gridtrust/chip.hpp"
#include "gridtrust/envelope.hpp"
#include "gridtrust/inverter.hpp"
#include "gridtrust/iur.hpp"

namespace gridtrust::device {

struct UpdatePackage {
  std::string version;
  Bytes payload;
  std::string publisher_id;
  crypto::Signature signature;

  // lp(version) || lp(payload); what the publisher signs.
  Bytes signed_bytes() const;
  crypto::Digest digest() const;
};

class DeviceAgent {
 public:
  DeviceAgent(std::string device_id, chip::ChipClient& chip, InverterModel& inverter,
              iur::IurService& registry);

  // Never throws for a bad envelope; rejections come back as Error
  // envelopes whose "reason" names the Errc.
  envelope::MacEnvelope handle_envelope(const envelope::MacEnvelope& env);
  // Text form of the above; unparseable input also yields an Error envelope.
  std::string handle_text(std::string_view json);

  // Throws BadSignature or BadCode, leaving the installed version untouched.
  bool apply_update(const UpdatePackage& package, const iur::UpdateCode& code);

  void inverter_step(Tick ticks = 1) { inverter_.step(ticks); }

  const std::string& device_id() const { return device_id_; }
  const RegisterMap& registers() const { return inverter_.registers(); }
  const std::string& firmware_version() const { return firmware_version_; }
  std::uint64_t install_count() const { return installs_; }
  std::uint64_t executed_commands() const { return executed_; }

 private:
  envelope::MacEnvelope reply(envelope::EnvelopeType type, envelope::Payload message);
  envelope::MacEnvelope error_reply(Errc reason, std::uint64_t in_reply_to);

  std::string device_id_;
  chip::ChipClient& chip_;
  InverterModel& inverter_;
  iur::IurService& registry_;
  std::uint64_t last_accepted_ = 0;
  std::uint64_t executed_ = 0;
  std::string firmware_version_ = "factory";
  std::uint64_t installs_ = 0;
};

}  // namespace gridtrust::device
