#pragma once

// Prosumer-side energy management client. Market traffic goes to the ledger
// as chip-signed proposals; device traffic goes to the agent as
// OTP-authenticated envelopes.

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "gridtrust/chip.hpp"
#include "gridtrust/envelope.hpp"
#include "gridtrust/te_ledger.hpp"

namespace gridtrust::ems {

// Carries one JSON envelope to the device agent and returns its reply, or
// nullopt if none arrived in time.
using DeviceLink = std::function<std::optional<std::string>(const std::string&)>;

struct ProsumerConfig {
  std::string prosumer_id;
  std::uint32_t rated_w = 4000;
};

struct DeviceReply {
  envelope::Payload message;
  std::int64_t output_w = 0;
  std::uint64_t counter = 0;
};

class Ems {
 public:
  Ems(ProsumerConfig config, chip::ChipClient& chip, te::TeLedger& ledger, DeviceLink link);

  const std::string& prosumer_id() const { return config_.prosumer_id; }
  const ProsumerConfig& config() const { return config_; }

  iur::Certificate enroll();
  void set_certificate(iur::Certificate cert) { certificate_ = std::move(cert); }
  const std::optional<iur::Certificate>& certificate() const { return certificate_; }

  // Signs `message` on the chip and wraps it with the enrolled certificate.
  te::SignedProposal make_proposal(te::Function function, Bytes message);

  // Throws MalformedBid before anything is sent.
  te::TransactionResult submit_bid(te::BidKind kind, te::AssetType asset, te::Watts quantity_w,
                                   te::MicroPrice price, std::uint32_t round);
  te::DispatchSetpoint fetch_dispatch(std::uint32_t round);
  std::vector<te::BillingRecord> query_billing(std::uint32_t from_round, std::uint32_t to_round);

  // Throws OtpRejectedByDevice, ResponseOtpInvalid, Timeout.
  DeviceReply dispatch_to_device(const te::DispatchSetpoint& setpoint);
  DeviceReply query_device(const std::string& kind);

  std::uint64_t last_sent_counter() const { return last_sent_; }
  void set_link(DeviceLink link) { link_ = std::move(link); }

 private:
  DeviceReply exchange(envelope::EnvelopeType type, envelope::Payload message);

  ProsumerConfig config_;
  chip::ChipClient& chip_;
  te::TeLedger& ledger_;
  DeviceLink link_;
  std::optional<iur::Certificate> certificate_;
  std::atomic<std::uint64_t> next_nonce_{1};
  std::uint64_t last_sent_ = 0;
};

}  // namespace gridtrust::ems
