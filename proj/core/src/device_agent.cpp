#include "gridtrust/device_agent.hpp"

namespace gridtrust::device {

using envelope::EnvelopeType;
using envelope::MacEnvelope;
using envelope::Payload;

Bytes UpdatePackage::signed_bytes() const {
  ByteWriter w;
  w.lp(version).lp(payload);
  return std::move(w).take();
}

crypto::Digest UpdatePackage::digest() const { return crypto::sha3_512(signed_bytes()); }

DeviceAgent::DeviceAgent(std::string device_id, chip::ChipClient& chip, InverterModel& inverter,
                         iur::IurService& registry)
    : device_id_(std::move(device_id)), chip_(chip), inverter_(inverter), registry_(registry) {}

MacEnvelope DeviceAgent::reply(EnvelopeType type, Payload message) {
  return envelope::seal(chip_, envelope::kDeviceToEms, type, std::move(message), device_id_);
}

MacEnvelope DeviceAgent::error_reply(Errc reason, std::uint64_t in_reply_to) {
  Payload p{{"reason", std::string(to_string(reason))},
            {"in_reply_to", static_cast<std::int64_t>(in_reply_to)}};
  try {
    return reply(EnvelopeType::Error, p);
  } catch (const Error&) {
    // Unprovisioned chip: the error goes out without a tag.
    MacEnvelope e;
    e.type = EnvelopeType::Error;
    e.message = std::move(p);
    e.sender_id = device_id_;
    return e;
  }
}

MacEnvelope DeviceAgent::handle_envelope(const MacEnvelope& env) {
  if (env.type != EnvelopeType::Query && env.type != EnvelopeType::Dispatch) {
    return error_reply(Errc::UnknownType, env.counter);
  }
  if (env.counter <= last_accepted_) return error_reply(Errc::ReplayDetected, env.counter);
  bool ok = false;
  try {
    ok = chip_.mac_check(envelope::kEmsToDevice, env.mac_message(), env.counter, env.otp);
  } catch (const Error&) {
    ok = false;
  }
  if (!ok) return error_reply(Errc::OtpMismatch, env.counter);
  last_accepted_ = env.counter;

  auto in_reply_to = static_cast<std::int64_t>(env.counter);
  if (env.type == EnvelopeType::Dispatch) {
    auto w = envelope::get_int(env.message, "real_power_w");
    if (!w || *w < INT32_MIN || *w > INT32_MAX) return error_reply(Errc::Malformed, env.counter);
    inverter_.write_setpoint(static_cast<std::int32_t>(*w));
    ++executed_;
    const auto& regs = inverter_.registers();
    return reply(EnvelopeType::Response, {{"ack", std::int64_t{1}},
                                          {"in_reply_to", in_reply_to},
                                          {"setpoint_w", std::int64_t{regs.setpoint_w}},
                                          {"output_w", std::int64_t{regs.output_w}}});
  }

  auto kind = envelope::get_string(env.message, "kind").value_or("output");
  const auto& regs = inverter_.registers();
  if (kind == "output") {
    ++executed_;
    return reply(EnvelopeType::Response,
                 {{"in_reply_to", in_reply_to}, {"output_w", std::int64_t{regs.output_w}}});
  }
  if (kind == "status") {
    ++executed_;
    return reply(EnvelopeType::Response, {{"in_reply_to", in_reply_to},
                                          {"setpoint_w", std::int64_t{regs.setpoint_w}},
                                          {"output_w", std::int64_t{regs.output_w}},
                                          {"status", std::int64_t{regs.status}},
                                          {"rated_w", std::int64_t{RegisterMap::rated_w}},
                                          {"firmware", firmware_version_}});
  }
  return error_reply(Errc::UnknownCommand, env.counter);
}

std::string DeviceAgent::handle_text(std::string_view json) {
  MacEnvelope env;
  try {
    env = MacEnvelope::from_json(json);
  } catch (const Error& e) {
    return error_reply(e.code(), 0).to_json();
  }
  return handle_envelope(env).to_json();
}

bool DeviceAgent::apply_update(const UpdatePackage& package, const iur::UpdateCode& code) {
  bool signed_ok = false;
  try {
    signed_ok = registry_.poo_verify(package.signed_bytes(), package.signature,
                                     package.publisher_id);
  } catch (const Error&) {
    signed_ok = false;
  }
  if (!signed_ok) throw Error(Errc::BadSignature, package.version);

  bool code_ok = false;
  try {
    code_ok = registry_.consume_update_code(device_id_, package.digest(), code);
  } catch (const Error& e) {
    throw Error(Errc::BadCode, std::string(to_string(e.code())));
  }
  if (!code_ok) throw Error(Errc::BadCode, "unknown code");

  firmware_version_ = package.version;
  ++installs_;
  return true;
}

}  // namespace gridtrust::device
