#pragma once

// Single-node permissioned ledger for the transactive energy market. Clients
// hold a CA certificate (first factor) and sign every proposal on their chip
// (second factor); the contract checks both before touching world state.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gridtrust/clearing.hpp"
#include "gridtrust/clock.hpp"
#include "gridtrust/hash_chain.hpp"
#include "gridtrust/iur.hpp"

namespace gridtrust::te {

inline constexpr std::int64_t kRoundHours = 1;

enum class Function : std::uint8_t { SubmitBid = 0, GetDispatch = 1, QueryBilling = 2 };

std::string_view to_string(Function f);

struct DispatchRequest {
  std::string prosumer_id;
  std::uint32_t round = 0;
  std::uint64_t nonce = 0;

  Bytes encode() const;
  static DispatchRequest decode(ByteView data);
};

struct BillingQuery {
  std::string prosumer_id;
  std::uint32_t from_round = 0;
  std::uint32_t to_round = 0;
  std::uint64_t nonce = 0;

  Bytes encode() const;
  static BillingQuery decode(ByteView data);
};

struct SignedProposal {
  iur::Certificate client_certificate;
  Function function = Function::SubmitBid;
  Bytes signed_message;
  crypto::Signature chip_signature;
  crypto::PublicKey chip_public_key{};

  Bytes encode() const;
  static SignedProposal decode(ByteView data);
};

struct BillingRecord {
  std::string prosumer_id;
  std::uint32_t round = 0;
  Watts dispatched_w = 0;
  std::int64_t energy_wh = 0;
  MicroPrice price = 0;
  // energy_wh * price in nano-units; positive is a credit to the prosumer.
  std::int64_t amount_nano = 0;

  Bytes encode() const;
  static BillingRecord decode(ByteView data);
  friend bool operator==(const BillingRecord&, const BillingRecord&) = default;
};

Bytes encode_billing(const std::vector<BillingRecord>& records);
std::vector<BillingRecord> decode_billing(ByteView data);

struct TransactionResult {
  Errc status = Errc::Ok;
  std::optional<std::uint64_t> block_height;
  // Function output: a DispatchSetpoint for GetDispatch, billing rows for
  // QueryBilling, empty for SubmitBid.
  Bytes payload;

  bool accepted() const { return status == Errc::Ok; }
};

class TeLedger {
 public:
  TeLedger(iur::IurService& registry, LogicalClock& clock, ClearingParams params = {});

  TeLedger(const TeLedger&) = delete;
  TeLedger& operator=(const TeLedger&) = delete;

  // Throws DuplicateProsumer, UnknownChipKey.
  iur::Certificate enroll_client(const std::string& prosumer_id,
                                 const crypto::PublicKey& chip_public_key);

  TransactionResult submit(const SignedProposal& proposal);

  // Idempotent per round. Throws NoBids.
  ClearingResult clear_market(std::uint32_t round);
  std::optional<ClearingResult> clearing(std::uint32_t round) const;

  // submit() for a GetDispatch proposal; throws the rejection as an Error.
  DispatchSetpoint get_dispatch(const SignedProposal& proposal);

  std::vector<BillingRecord> billing_query(const std::string& prosumer_id,
                                           std::uint32_t from_round,
                                           std::uint32_t to_round) const;
  std::vector<BillingRecord> round_billing(std::uint32_t round) const;

  bool chain_verify() const { return chain_verify_detail().intact; }
  ChainVerdict chain_verify_detail() const;

  HashChain block_store() const;
  // Canonical serialization of the key/value world state.
  Bytes world_state_bytes() const;
  std::vector<Bid> bids(std::uint32_t round) const;

  // Test hook: swaps in a contract engine for one endorser so a divergent
  // peer can be simulated.
  void set_faulty_endorser(bool faulty) { faulty_endorser_ = faulty; }

 private:
  using WorldState = std::map<std::string, Bytes>;
  struct RwSet {
    std::map<std::string, std::optional<Bytes>> reads;
    std::map<std::string, Bytes> writes;
    Bytes output;
    Errc status = Errc::Ok;
    friend bool operator==(const RwSet&, const RwSet&) = default;
  };
  struct Credential {
    iur::Certificate certificate;
    crypto::PublicKey chip_public_key{};
  };

  RwSet execute(const WorldState& state, const SignedProposal& p, bool perturb) const;
  void append_block(std::uint8_t kind, ByteView body);

  mutable std::mutex mu_;
  iur::IurService& registry_;
  LogicalClock& clock_;
  ClearingParams params_;
  std::map<std::string, Credential> credentials_;
  WorldState state_;
  HashChain blocks_;
  bool faulty_endorser_ = false;
};

}  // namespace gridtrust::te
