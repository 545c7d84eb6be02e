#pragma once

// Software-in-the-loop orchestrator: builds a fleet of chips, agents and
// EMS clients around one registrar and one market ledger, drives it through
// provisioning, market rounds and attacks, and renders a report.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gridtrust/device_agent.hpp"
#include "gridtrust/ems.hpp"
#include "gridtrust/iur.hpp"
#include "gridtrust/scenario.hpp"
#include "gridtrust/socket_link.hpp"
#include "gridtrust/te_ledger.hpp"

namespace gridtrust::harness {

enum class Verb : std::uint8_t { Provision, Market, Attack };

std::string_view to_string(Verb v);

// Every byte that crossed a chip interface, a provisioning wire, a device
// link or the ledger boundary during a run.
class Transcript {
 public:
  void add(ByteView bytes);
  void add(std::string_view text) { add(as_bytes(text)); }
  std::size_t total_bytes() const;
  std::size_t records() const;
  // Count of records containing a run of `min_len` bytes from `secret`.
  std::size_t leaks(ByteView secret, std::size_t min_len) const;

 private:
  mutable std::mutex mu_;
  std::vector<Bytes> records_;
};

struct StepOutcome {
  std::size_t index = 0;
  std::string name;
  std::string subject;
  bool ok = true;
  Errc error = Errc::Ok;
  std::string detail;
};

struct AttackVerdict {
  AttackKind kind = AttackKind::ReplayOtp;
  bool blocked = false;
  Errc error = Errc::Ok;
  std::string detail;
};

struct DispatchObservation {
  std::uint32_t round = 0;
  std::string prosumer_id;
  te::Watts ledger_w = 0;
  std::int32_t register_w = 0;
  std::uint32_t output_w = 0;
  std::uint32_t expected_output_w = 0;
  std::uint32_t irradiance_w = 0;
};

struct RoundSummary {
  std::uint32_t round = 0;
  te::MicroPrice price = 0;
  std::uint32_t iterations = 0;
  bool converged = false;
  te::Watts imbalance_w = 0;
  std::int64_t credits_nano = 0;
  std::int64_t debits_nano = 0;
};

struct ScenarioReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Verb verb = Verb::Attack;
  std::vector<StepOutcome> steps;
  std::vector<RoundSummary> rounds;
  std::vector<DispatchObservation> dispatch;
  std::vector<AttackVerdict> attacks;
  std::string iur_digest;
  std::string te_digest;
  bool iur_intact = false;
  bool te_intact = false;
  std::size_t iur_events = 0;
  std::size_t te_blocks = 0;
  Millis logical_time_ms = 0;
  std::size_t transcript_bytes = 0;
  std::size_t secrets_checked = 0;
  std::size_t secret_leaks = 0;

  bool steps_pass() const;
  bool all_blocked() const;
  bool passed() const { return steps_pass() && all_blocked(); }
  int exit_code() const { return passed() ? 0 : 1; }
  std::optional<std::size_t> first_failed_step() const;
  // Throws StepFailure naming the first failed step.
  void require_pass() const;

  std::string to_text() const;
};

struct RunOptions {
  Verb verb = Verb::Attack;
  std::optional<std::uint64_t> seed;
  // If set, iur.ledger and te.ledger are written here at the end of the run.
  std::optional<std::filesystem::path> ledger_dir;
  // Carry envelopes over a socket pair rather than direct calls.
  bool socket_links = true;
};

class World;

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options = {});
ScenarioReport run_scenario_file(const std::filesystem::path& path, const RunOptions& options = {});

struct AuditVerdict {
  bool intact = true;
  std::optional<std::uint64_t> first_bad_index;
  std::size_t entries = 0;

  std::string to_text() const;
};

// Offline chain check of a saved ledger file. Throws FileUnreadable.
AuditVerdict audit(const std::filesystem::path& ledger_path);

// Fleet under test. Exposed so tests can drive individual stages.
class World {
 public:
  struct Node {
    std::string id;
    chip::ChipIdentity ems_identity;
    chip::ChipIdentity agent_identity;
    std::unique_ptr<DeterministicRandom> ems_rng;
    std::unique_ptr<DeterministicRandom> agent_rng;
    std::unique_ptr<chip::CtcChip> ems_chip;
    std::unique_ptr<chip::CtcChip> agent_chip;
    std::unique_ptr<chip::ChipClient> ems_client;
    std::unique_ptr<chip::ChipClient> agent_client;
    std::unique_ptr<device::InverterModel> inverter;
    std::unique_ptr<device::DeviceAgent> agent;
    std::unique_ptr<device::SocketLink> socket;
    std::unique_ptr<ems::Ems> ems;
    // Optional man-in-the-middle on the EMS -> agent path.
    std::function<std::optional<std::string>(const std::string&)> intercept;
    std::optional<std::string> last_request;
    std::optional<std::string> last_response;
  };

  World(const Scenario& scenario, std::uint64_t seed, bool socket_links = true);
  ~World();

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  LogicalClock& clock() { return clock_; }
  iur::IurService& iur() { return *iur_; }
  te::TeLedger& ledger() { return *ledger_; }
  Transcript& transcript() { return transcript_; }
  Node& node(const std::string& id);
  std::vector<std::string> node_ids() const;
  const Scenario& scenario() const { return scenario_; }

  // A fresh chip with its own identity, registered in the secret inventory.
  struct LooseChip {
    chip::ChipIdentity identity;
    std::unique_ptr<DeterministicRandom> rng;
    std::unique_ptr<chip::CtcChip> chip;
    std::unique_ptr<chip::ChipClient> client;
  };
  LooseChip& make_chip(const std::string& device_id);

  // Hands one envelope line to the node's agent, bypassing the EMS.
  std::optional<std::string> deliver(Node& node, const std::string& text);

  // A chip pipe that records every request and response frame.
  chip::ChipPipe recording_pipe(chip::CtcChip& chip);

  iur::ProvisioningOutcome provision(const std::string& device_id, chip::CtcChip& chip,
                                     const esp::FaultPlan& plan = {});
  // Chip and registrar agree on the active configuration.
  bool consistent(const std::string& device_id, chip::ChipClient& client);

  // All secrets known to the harness: identity seeds, supply-chain secrets,
  // application keys and the CA seed.
  std::vector<Bytes> secret_inventory() const;

  // The publisher identity that signs firmware.
  LooseChip& vendor() { return *vendor_; }

 private:
  void build_node(const ProsumerSpec& spec);

  Scenario scenario_;
  std::uint64_t seed_;
  bool socket_links_;
  LogicalClock clock_;
  DeterministicRandom rng_;
  crypto::Seed ca_seed_{};
  Transcript transcript_;
  std::unique_ptr<iur::IurService> iur_;
  std::unique_ptr<te::TeLedger> ledger_;
  std::map<std::string, std::unique_ptr<Node>> nodes_;
  std::vector<std::string> order_;
  std::vector<std::unique_ptr<LooseChip>> loose_;
  LooseChip* vendor_ = nullptr;
};

}  // namespace gridtrust::harness
