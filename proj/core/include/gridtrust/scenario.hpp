#pragma once

// Scenario files: line-oriented text with a version header.
//
//   gridtrust-scenario 1
//   name baseline
//   seed 42
//   rounds 1
//   prosumer <id> <generation|consumption> <DER|EV|ControlledLoad|Other> <watts> <price>
//   irradiance <id> <tick> <watts>
//   irradiance-file <id> <path>          (relative to the scenario file)
//   fault provision <id> <1|2|3a|3b> <drop|corrupt|replay|reorder>
//   attack <name>
//
// '#' starts a comment.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridtrust/clearing.hpp"
#include "gridtrust/esp.hpp"
#include "gridtrust/inverter.hpp"

namespace gridtrust::harness {

enum class AttackKind : std::uint8_t {
  ReplayOtp,
  TamperDispatch,
  ResponseReplay,
  StolenCredential,
  DeviceImpersonation,
  ChipSubstitution,
  FirmwareReprogram,
  ProvisionFault,
  RevokedCertificate,
};

std::string_view to_string(AttackKind a);
// Throws ScenarioParseError.
AttackKind attack_kind_from_string(std::string_view s);
const std::vector<AttackKind>& all_attacks();

struct ProsumerSpec {
  std::string id;
  te::BidKind kind = te::BidKind::Generation;
  te::AssetType asset = te::AssetType::DER;
  te::Watts quantity_w = 0;
  te::MicroPrice price = 0;
  device::IrradianceTrace irradiance;
};

struct ProvisionFaultSpec {
  std::string prosumer_id;
  esp::WireMessage target = esp::WireMessage::Msg1;
  esp::FaultKind kind = esp::FaultKind::Drop;
};

struct Scenario {
  std::string name = "unnamed";
  std::uint64_t seed = 0;
  std::uint32_t rounds = 1;
  std::vector<ProsumerSpec> prosumers;
  std::vector<ProvisionFaultSpec> provision_faults;
  std::vector<AttackKind> attacks;

  // Throws ScenarioParseError naming the offending line.
  static Scenario parse(std::istream& in, const std::filesystem::path& base_dir = {});
  // Throws FileUnreadable or ScenarioParseError.
  static Scenario load(const std::filesystem::path& path);
};

}  // namespace gridtrust::harness
