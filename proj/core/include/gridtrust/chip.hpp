#pragma once

// Cryptographic Trust Center emulator.
//
// The chip is a command processor: a ChipCommand goes in, a ChipResponse
// comes out. Private seeds and symmetric keys live only inside CtcChip and no
// response variant has a field that could carry them.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "gridtrust/clock.hpp"
#include "gridtrust/crypto.hpp"
#include "gridtrust/error.hpp"
#include "gridtrust/esp_crypto.hpp"
#include "gridtrust/random.hpp"

namespace gridtrust::chip {

using crypto::MacTag;
using crypto::Nonce;
using crypto::PublicKey;
using crypto::SealedPacket;
using crypto::Signature;
using crypto::SymmetricKey;

enum class Lifecycle : std::uint8_t {
  SupplyChainProvisioned = 0,
  SupersessionPending = 1,
  ApplicationProvisioned = 2,
};

std::string_view to_string(Lifecycle l);

struct SymmetricKeyConfig {
  SymmetricKey key;
  std::uint32_t config_id = 0;
};

inline constexpr std::uint64_t kDefaultMacWindow = 32;

// Commands -----------------------------------------------------------------

struct GetPublicKey {};
struct GetStatus {};
struct SignMessage {
  Bytes message;
};
struct MacNext {
  std::string context;
  Bytes message;
};
struct MacCheck {
  std::string context;
  Bytes message;
  std::uint64_t counter = 0;
  MacTag tag;
  std::uint64_t window = kDefaultMacWindow;
};
struct ChallengeRespond {
  Bytes challenge;
  Millis issued_at = 0;
  std::uint32_t deadline_ms = 0;
};
struct ProvisionBegin {
  Nonce server_nonce{};
};
struct ProvisionInstall {
  SealedPacket packet;
};
struct SupersessionProof {};
struct ProvisionCommit {
  SealedPacket commit_stream;
};
struct ProvisionAbort {};
struct DeriveSessionKey {
  std::string label;
  Bytes nonce_a;
  Bytes nonce_b;
};

using CommandBody =
    std::variant<GetPublicKey, GetStatus, SignMessage, MacNext, MacCheck, ChallengeRespond,
                 ProvisionBegin, ProvisionInstall, SupersessionProof, ProvisionCommit,
                 ProvisionAbort, DeriveSessionKey>;

struct ChipCommand {
  std::uint32_t correlation_id = 0;
  CommandBody body;
};

// Results ------------------------------------------------------------------

struct PublicKeyResult {
  PublicKey public_key{};
};
struct StatusResult {
  std::string device_id;
  Lifecycle lifecycle = Lifecycle::SupplyChainProvisioned;
  std::uint32_t config_id = 0;
  std::uint64_t mac_counter = 0;
};
struct SignatureResult {
  Signature signature;
};
struct MacResult {
  std::uint64_t counter = 0;
  MacTag tag;
};
struct CheckResult {
  bool accepted = false;
};
struct TagResult {
  MacTag tag;
};
struct BeginResult {
  Nonce device_nonce{};
  PublicKey public_key{};
  MacTag tag;
};
struct ProofResult {
  esp::ProofPair proof;
};
struct CommitResult {
  Lifecycle lifecycle = Lifecycle::SupplyChainProvisioned;
  std::uint32_t config_id = 0;
};
// Ephemeral key derived from the active config; never the config key itself.
struct SessionKeyResult {
  SymmetricKey session_key;
};

using ResponseBody =
    std::variant<std::monostate, PublicKeyResult, StatusResult, SignatureResult, MacResult,
                 CheckResult, TagResult, BeginResult, ProofResult, CommitResult,
                 SessionKeyResult>;

struct ChipResponse {
  std::uint32_t correlation_id = 0;
  Errc status = Errc::Ok;
  ResponseBody body;
};

// Canonical binary encoding (see docs/wire-format.md). Every command and
// response is a single length-prefixed frame.
Bytes encode(const ChipCommand& cmd);
ChipCommand decode_command(ByteView frame);
Bytes encode(const ChipResponse& resp);
ChipResponse decode_response(ByteView frame);

// The emulated chip --------------------------------------------------------

struct ChipIdentity {
  std::string device_id;
  SymmetricKey supply_chain_secret;
  crypto::Seed identity_seed{};
};

class CtcChip {
 public:
  CtcChip(ChipIdentity identity, const LogicalClock& clock, RandomSource& rng);

  CtcChip(const CtcChip&) = delete;
  CtcChip& operator=(const CtcChip&) = delete;

  // The single command entry point. Commands are serialized internally.
  ChipResponse execute(const ChipCommand& cmd);
  // Same entry point over the byte encoding; malformed frames yield a
  // Malformed status response.
  Bytes execute_frame(ByteView frame);

 private:
  struct Session {
    Nonce server_nonce{};
    Nonce device_nonce{};
    Bytes msg1;
    std::optional<crypto::Digest> transcript;
  };

  ResponseBody handle(const GetPublicKey&);
  ResponseBody handle(const GetStatus&);
  ResponseBody handle(const SignMessage&);
  ResponseBody handle(const MacNext&);
  ResponseBody handle(const MacCheck&);
  ResponseBody handle(const ChallengeRespond&);
  ResponseBody handle(const ProvisionBegin&);
  ResponseBody handle(const ProvisionInstall&);
  ResponseBody handle(const SupersessionProof&);
  ResponseBody handle(const ProvisionCommit&);
  ResponseBody handle(const ProvisionAbort&);
  ResponseBody handle(const DeriveSessionKey&);

  Lifecycle lifecycle() const;
  bool application_key_active() const { return active_.config_id > 0; }
  void rollback();

  std::mutex mu_;
  const LogicalClock& clock_;
  RandomSource& rng_;
  std::string device_id_;
  crypto::KeyPair identity_;
  SymmetricKeyConfig active_;
  std::optional<SymmetricKeyConfig> pending_;
  std::optional<Session> session_;
  std::uint64_t mac_counter_ = 1;
  std::map<std::string, std::uint64_t> last_accepted_;
};

// Byte pipe to a chip (direct call, socket, or a tapping wrapper).
using ChipPipe = std::function<Bytes(ByteView)>;

ChipPipe direct_pipe(CtcChip& chip);

// Typed host-side driver. Every call encodes a command, sends it through the
// pipe, and throws Error with the response status on failure.
class ChipClient {
 public:
  explicit ChipClient(ChipPipe pipe) : pipe_(std::move(pipe)) {}

  ChipResponse call(CommandBody body);

  PublicKey public_key();
  StatusResult status();
  Signature sign(ByteView message);
  MacResult mac_next(std::string_view context, ByteView message);
  bool mac_check(std::string_view context, ByteView message, std::uint64_t counter,
                 const MacTag& tag, std::uint64_t window = kDefaultMacWindow);
  MacTag challenge_respond(ByteView challenge, Millis issued_at, std::uint32_t deadline_ms);
  BeginResult provision_begin(const Nonce& server_nonce);
  MacTag provision_install(const SealedPacket& packet);
  esp::ProofPair supersession_proof();
  CommitResult provision_commit(const SealedPacket& commit_stream);
  void provision_abort();
  SymmetricKey derive_session_key(std::string_view label, ByteView nonce_a, ByteView nonce_b);

 private:
  template <typename T>
  T expect(CommandBody body);

  ChipPipe pipe_;
  std::uint32_t next_correlation_ = 1;
};

}  // namespace gridtrust::chip
