#pragma once

// Three-segment provisioning exchange between a registrar and a chip host.
//
//   registrar -> device  Hello{server_nonce}            (opens segment 1)
//   device -> registrar  Msg1{nonces, pubkey, mac}      segment 1
//   registrar -> device  Msg2{sealed key packet}        segment 2
//   device -> registrar  Msg3a{super-session proof}     segment 3a
//   registrar -> device  Msg3b{sealed commit stream}    segment 3b
//
// After both state machines stop, the registrar confirms which configuration
// the chip ended up with through a timed challenge on the management channel.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gridtrust/chip.hpp"
#include "gridtrust/clock.hpp"
#include "gridtrust/esp_crypto.hpp"
#include "gridtrust/random.hpp"

namespace gridtrust::esp {

inline constexpr Millis kDefaultSegmentTimeout = 5000;

enum class WireMessage : std::uint8_t { Hello = 0, Msg1 = 1, Msg2 = 2, Msg3a = 3, Msg3b = 4 };

std::string_view to_string(WireMessage m);
// "1", "2", "3a", "3b" (Hello belongs to segment 1).
std::string_view segment_name(WireMessage m);

struct Hello {
  Nonce server_nonce{};
};
struct Msg1 {
  Nonce server_nonce{};
  Nonce device_nonce{};
  PublicKey device_public_key{};
  MacTag mutual_mac;
};
struct Msg2 {
  SealedPacket key_packet;
};
struct Msg3a {
  ProofPair proof;
};
struct Msg3b {
  SealedPacket commit_stream;
};

struct ProvisionMessage {
  std::uint64_t session_id = 0;
  std::variant<Hello, Msg1, Msg2, Msg3a, Msg3b> body;

  WireMessage kind() const { return static_cast<WireMessage>(body.index()); }
  // Segment payload without the session header.
  Bytes body_bytes() const;
  // frame(u8 ordinal || u64 session_id || lp(body_bytes)).
  Bytes encode() const;
  static ProvisionMessage decode(ByteView frame);
};

enum class Party : std::uint8_t { Device, Registrar };

struct EndpointResult {
  bool done = false;
  bool committed = false;
  Errc error = Errc::Ok;
  std::optional<WireMessage> failed_at;
};

// Device-side state machine; drives the chip through its command interface.
class DeviceEndpoint {
 public:
  explicit DeviceEndpoint(chip::ChipClient& chip) : chip_(chip) {}

  void arm(Millis now, Millis timeout);
  std::vector<ProvisionMessage> on_bytes(ByteView frame, Millis now);
  void on_timeout(Millis now);
  std::optional<Millis> deadline() const;
  const EndpointResult& result() const { return result_; }

 private:
  enum class State { AwaitHello, AwaitMsg2, AwaitMsg3b, Done };
  WireMessage expected() const;
  void fail(Errc e, WireMessage at);

  chip::ChipClient& chip_;
  State state_ = State::AwaitHello;
  std::uint64_t session_id_ = 0;
  Millis timeout_ = kDefaultSegmentTimeout;
  Millis deadline_ = 0;
  EndpointResult result_;
};

struct RegistrarPlan {
  std::uint64_t session_id = 0;
  std::string device_id;
  SymmetricKey current_key;  // supply-chain secret or the current application key
  std::uint32_t current_config_id = 0;
  SymmetricKey new_key;
};

// Registrar-side state machine.
class RegistrarEndpoint {
 public:
  RegistrarEndpoint(RegistrarPlan plan, RandomSource& rng);

  ProvisionMessage start(Millis now, Millis timeout);
  std::vector<ProvisionMessage> on_bytes(ByteView frame, Millis now);
  void on_timeout(Millis now);
  std::optional<Millis> deadline() const;

  // Timed challenge over the management channel; sets the final committed
  // flag according to which key the chip answers with. Throws Inconsistent if
  // the chip answers under neither key.
  void confirm(chip::ChipClient& chip, const LogicalClock& clock);

  const EndpointResult& result() const { return result_; }
  bool commit_sent() const { return commit_sent_; }
  std::optional<PublicKey> device_public_key() const { return device_public_key_; }
  const RegistrarPlan& plan() const { return plan_; }

 private:
  enum class State { AwaitMsg1, AwaitMsg3a, Done };
  WireMessage expected() const;
  void fail(Errc e, WireMessage at);

  RegistrarPlan plan_;
  RandomSource& rng_;
  State state_ = State::AwaitMsg1;
  Millis timeout_ = kDefaultSegmentTimeout;
  Millis deadline_ = 0;
  Nonce server_nonce_{};
  Bytes msg1_body_;
  std::optional<Digest> transcript_;
  std::optional<PublicKey> device_public_key_;
  bool commit_sent_ = false;
  EndpointResult result_;
};

enum class FaultKind : std::uint8_t { Drop, Corrupt, Replay, Reorder };

std::string_view to_string(FaultKind k);
FaultKind fault_kind_from_string(std::string_view s);
WireMessage wire_message_from_string(std::string_view s);

struct Fault {
  WireMessage target = WireMessage::Msg1;
  FaultKind kind = FaultKind::Drop;
};

struct FaultPlan {
  std::vector<Fault> faults;
  std::uint64_t seed = 0;
  // Encoded messages captured from an earlier session; Replay substitutes
  // these (re-labelled with the current session id). Without one, Replay
  // delivers the genuine message twice.
  std::map<WireMessage, Bytes> stale;
  Millis segment_timeout = kDefaultSegmentTimeout;
};

struct TraceEvent {
  Millis time = 0;
  std::string text;
};

struct ProvisioningTrace {
  std::vector<TraceEvent> events;
  EndpointResult device;
  EndpointResult registrar;
  // First failure observed by either side, if any.
  Errc error = Errc::Ok;
  std::optional<WireMessage> failed_at;
  chip::Lifecycle final_lifecycle = chip::Lifecycle::SupplyChainProvisioned;
  std::uint32_t final_config_id = 0;
  // Every genuine message put on the wire, for later replay attacks.
  std::map<WireMessage, Bytes> sent;

  bool committed() const { return device.committed && registrar.committed; }
};

// Drives both endpoints to completion under the fault plan. `chip` is the
// management channel the registrar uses to confirm the outcome.
ProvisioningTrace run_provisioning(DeviceEndpoint& device, RegistrarEndpoint& registrar,
                                   chip::ChipClient& chip, const FaultPlan& plan,
                                   LogicalClock& clock);

}  // namespace gridtrust::esp
