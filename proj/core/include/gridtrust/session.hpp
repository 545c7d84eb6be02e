#pragma once

// Authenticated, encrypted point-to-point channel between two provisioned
// chips. Frames are SealedPackets whose nonce carries the sequence counter,
// so any edit to the counter breaks the tag.

#include <cstdint>

#include "gridtrust/chip.hpp"
#include "gridtrust/crypto.hpp"
#include "gridtrust/random.hpp"

namespace gridtrust::esp {

class SecureSession {
 public:
  SecureSession(crypto::SymmetricKey send_key, crypto::SymmetricKey recv_key)
      : send_key_(std::move(send_key)), recv_key_(std::move(recv_key)) {}

  Bytes send(ByteView plaintext);
  // Throws AuthenticationFailure (tampered or foreign frame), ReplayDetected
  // (counter already seen), SequenceGap (a frame went missing).
  Bytes recv(ByteView frame);

  std::uint64_t send_counter() const { return send_counter_; }
  std::uint64_t recv_counter() const { return recv_counter_; }

 private:
  crypto::SymmetricKey send_key_;
  crypto::SymmetricKey recv_key_;
  std::uint64_t send_counter_ = 0;
  std::uint64_t recv_counter_ = 0;
};

struct SessionPair {
  SecureSession initiator;
  SecureSession responder;
};

// Both chips derive the link key internally from their active configuration
// and prove possession to each other before any traffic. A chip without an
// application configuration makes the call fail with NotProvisioned; chips
// holding different keys fail with AuthenticationFailure.
SessionPair session_establish(chip::ChipClient& initiator, chip::ChipClient& responder,
                              RandomSource& rng);

}  // namespace gridtrust::esp
