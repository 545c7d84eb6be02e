#pragma once

// Industry Utility Registrar: device registry, registrar side of provisioning,
// certificate authority with revocation list, single-use update codes, and
// the append-only provisioning ledger.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridtrust/chip.hpp"
#include "gridtrust/clock.hpp"
#include "gridtrust/crypto.hpp"
#include "gridtrust/esp.hpp"
#include "gridtrust/hash_chain.hpp"
#include "gridtrust/random.hpp"

namespace gridtrust::iur {

using crypto::Digest;
using crypto::PublicKey;
using crypto::Signature;
using crypto::SymmetricKey;

enum class EventKind : std::uint8_t {
  Registered = 0,
  Challenged,
  KeyPacketIssued,
  Committed,
  RolledBack,
  CertIssued,
  CertRevoked,
  UpdateAuthorized,
};

std::string_view to_string(EventKind k);

struct ProvisioningEvent {
  std::uint64_t sequence_no = 0;
  std::string device_id;
  EventKind kind = EventKind::Registered;
  Millis timestamp = 0;
  Digest payload_digest{};
  Digest prev_hash{};
  Digest this_hash{};

  // Canonical bytes hashed into the chain after the sequence number.
  Bytes payload() const;
  static ProvisioningEvent from_entry(const ChainEntry& entry);
};

struct DeviceRecord {
  std::string device_id;
  SymmetricKey shared_secret;  // supply-chain default
  SymmetricKey current_key;    // whatever the chip should have active
  std::uint32_t current_config_id = 0;
  chip::Lifecycle lifecycle = chip::Lifecycle::SupplyChainProvisioned;
  std::optional<PublicKey> enrolled_public_key;
  std::optional<std::string> key_group;
};

struct Certificate {
  std::uint64_t serial = 0;
  std::string subject_id;
  PublicKey subject_public_key{};
  Signature issuer_signature;

  // Bytes covered by the issuer signature.
  Bytes tbs() const;
  Bytes encode() const;
  static Certificate decode(ByteView data);
  static Certificate read(ByteReader& r);
  void write(ByteWriter& w) const;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

bool certificate_signature_valid(const Certificate& cert, const PublicKey& ca_key);

using UpdateCode = std::array<std::uint8_t, 32>;

struct UpdateAuthorization {
  Digest package_digest{};
  std::string target_device_id;
  UpdateCode single_use_code{};
  bool consumed = false;
};

struct ProvisioningOutcome {
  bool committed = false;
  Errc error = Errc::Ok;
  std::optional<esp::WireMessage> failed_at;
  std::uint32_t config_id = 0;
  esp::ProvisioningTrace trace;
};

class IurService {
 public:
  IurService(LogicalClock& clock, RandomSource& rng, const crypto::Seed& ca_seed);

  IurService(const IurService&) = delete;
  IurService& operator=(const IurService&) = delete;

  // Throws DuplicateDevice. Devices sharing a key group are handed the same
  // application key, so they can MAC each other directly.
  DeviceRecord register_device(const std::string& device_id, const SymmetricKey& shared_secret,
                               std::optional<std::string> key_group = std::nullopt);

  // Runs the registrar side of the three-segment exchange against the chip
  // behind `channel`. Throws UnknownDevice or SessionBusy; protocol failures
  // come back in the outcome, never as exceptions.
  ProvisioningOutcome provision_device(const std::string& device_id, chip::ChipPipe channel,
                                       const esp::FaultPlan& plan = {});

  // Forces the next provisioning of any group member onto a fresh key.
  void rotate_group_key(const std::string& key_group);

  Certificate issue_certificate(const std::string& subject_id, const PublicKey& public_key);
  void revoke_certificate(std::uint64_t serial);
  bool crl_check(std::uint64_t serial) const;
  std::vector<std::uint64_t> crl() const;
  PublicKey ca_public_key() const { return ca_.public_key; }

  UpdateAuthorization authorize_update(const std::string& device_id, const Digest& package_digest);
  // True exactly once per authorization. Throws UnknownDevice,
  // CodeAlreadyConsumed, DigestMismatch; an unknown code returns false.
  bool consume_update_code(const std::string& device_id, const Digest& package_digest,
                           const UpdateCode& code);

  ChainVerdict ledger_verify() const;
  // Proof of origin: does `signature` over `data` verify under the device's
  // enrolled identity key? Throws UnknownDevice, NoEnrolledKey.
  bool poo_verify(ByteView data, const Signature& signature, const std::string& device_id) const;

  std::optional<DeviceRecord> find_device(const std::string& device_id) const;
  std::optional<std::string> device_for_public_key(const PublicKey& key) const;

  HashChain ledger_snapshot() const;
  std::vector<ProvisioningEvent> events() const;

 private:
  void append_event(const std::string& device_id, EventKind kind, const Digest& payload_digest);

  mutable std::mutex mu_;
  LogicalClock& clock_;
  RandomSource& rng_;
  crypto::KeyPair ca_;
  std::map<std::string, DeviceRecord> devices_;
  std::map<std::string, SymmetricKey> group_keys_;
  std::set<std::string> busy_;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_serial_ = 1;
  std::map<std::uint64_t, Certificate> certificates_;
  std::set<std::uint64_t> revoked_;
  std::vector<UpdateAuthorization> updates_;
  HashChain ledger_;
};

}  // namespace gridtrust::iur
