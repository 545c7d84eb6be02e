#include "gridtrust/scenario.hpp"

#include <fstream>
#include <sstream>

#include "gridtrust/error.hpp"

namespace gridtrust::harness {

namespace {

constexpr std::string_view kHeader = "gridtrust-scenario 1";

const std::vector<std::pair<AttackKind, std::string_view>>& attack_names() {
  static const std::vector<std::pair<AttackKind, std::string_view>> names = {
      {AttackKind::ReplayOtp, "replay-otp"},
      {AttackKind::TamperDispatch, "tamper-dispatch"},
      {AttackKind::ResponseReplay, "response-replay"},
      {AttackKind::StolenCredential, "stolen-credential"},
      {AttackKind::DeviceImpersonation, "device-impersonation"},
      {AttackKind::ChipSubstitution, "chip-substitution"},
      {AttackKind::FirmwareReprogram, "firmware-reprogram"},
      {AttackKind::ProvisionFault, "provision-fault"},
      {AttackKind::RevokedCertificate, "revoked-certificate"},
  };
  return names;
}

}  // namespace

std::string_view to_string(AttackKind a) {
  for (const auto& [k, n] : attack_names()) {
    if (k == a) return n;
  }
  return "?";
}

AttackKind attack_kind_from_string(std::string_view s) {
  for (const auto& [k, n] : attack_names()) {
    if (n == s) return k;
  }
  throw Error(Errc::ScenarioParseError, "unknown attack '" + std::string(s) + "'");
}

const std::vector<AttackKind>& all_attacks() {
  static const std::vector<AttackKind> all = [] {
    std::vector<AttackKind> v;
    for (const auto& [k, n] : attack_names()) v.push_back(k);
    return v;
  }();
  return all;
}

Scenario Scenario::parse(std::istream& in, const std::filesystem::path& base_dir) {
  Scenario s;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  auto fail = [&](const std::string& why) -> Error {
    return Error(Errc::ScenarioParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  auto find_prosumer = [&](const std::string& id) -> ProsumerSpec& {
    for (auto& p : s.prosumers) {
      if (p.id == id) return p;
    }
    throw fail("unknown prosumer '" + id + "'");
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kHeader) throw fail("expected '" + std::string(kHeader) + "'");
      header = true;
      continue;
    }
    std::istringstream words(line);
    std::string key;
    words >> key;
    std::vector<std::string> args;
    for (std::string w; words >> w;) args.push_back(w);
    auto want = [&](std::size_t n) {
      if (args.size() != n) {
        throw fail("'" + key + "' takes " + std::to_string(n) + " argument(s)");
      }
    };
    auto number = [&](const std::string& text) -> std::uint64_t {
      try {
        std::size_t used = 0;
        auto v = std::stoull(text, &used);
        if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
        return v;
      } catch (const std::logic_error&) {
        throw fail("expected a non-negative integer, got '" + text + "'");
      }
    };

    try {
      if (key == "name") {
        want(1);
        s.name = args[0];
      } else if (key == "seed") {
        want(1);
        s.seed = number(args[0]);
      } else if (key == "rounds") {
        want(1);
        s.rounds = static_cast<std::uint32_t>(number(args[0]));
        if (s.rounds == 0) throw fail("rounds must be positive");
      } else if (key == "prosumer") {
        want(5);
        ProsumerSpec p;
        p.id = args[0];
        for (const auto& q : s.prosumers) {
          if (q.id == p.id) throw fail("duplicate prosumer '" + p.id + "'");
        }
        p.kind = te::bid_kind_from_string(args[1]);
        p.asset = te::asset_type_from_string(args[2]);
        p.quantity_w = static_cast<te::Watts>(number(args[3]));
        p.price = te::parse_price(args[4]);
        s.prosumers.push_back(std::move(p));
      } else if (key == "irradiance") {
        want(3);
        find_prosumer(args[0]).irradiance.set(number(args[1]),
                                              static_cast<std::uint32_t>(number(args[2])));
      } else if (key == "irradiance-file") {
        want(2);
        auto path = std::filesystem::path(args[1]);
        if (path.is_relative()) path = base_dir / path;
        find_prosumer(args[0]).irradiance = device::IrradianceTrace::load(path);
      } else if (key == "fault") {
        want(4);
        if (args[0] != "provision") throw fail("only 'fault provision' is supported");
        find_prosumer(args[1]);
        s.provision_faults.push_back(
            {args[1], esp::wire_message_from_string(args[2]), esp::fault_kind_from_string(args[3])});
      } else if (key == "attack") {
        want(1);
        s.attacks.push_back(attack_kind_from_string(args[0]));
      } else {
        throw fail("unknown directive '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::ScenarioParseError) throw;
      throw fail(e.what());
    }
  }
  if (!header) throw Error(Errc::ScenarioParseError, "empty scenario");
  if (s.prosumers.empty()) throw Error(Errc::ScenarioParseError, "no prosumers");
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileUnreadable, path.string());
  return parse(in, path.parent_path());
}

}  // namespace gridtrust::harness
