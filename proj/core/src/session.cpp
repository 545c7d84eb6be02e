#include "gridtrust/session.hpp"

#include "gridtrust/error.hpp"

namespace gridtrust::esp {

namespace {

crypto::Nonce counter_nonce(std::uint64_t counter) {
  crypto::Nonce n{};
  for (int i = 0; i < 8; ++i) {
    n[n.size() - 1 - static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(counter >> (8 * i));
  }
  return n;
}

std::uint64_t nonce_counter(const crypto::Nonce& n) {
  for (std::size_t i = 0; i + 8 < n.size(); ++i) {
    if (n[i] != 0) throw Error(Errc::AuthenticationFailure, "bad frame nonce");
  }
  std::uint64_t v = 0;
  for (std::size_t i = n.size() - 8; i < n.size(); ++i) v = (v << 8) | n[i];
  return v;
}

}  // namespace

Bytes SecureSession::send(ByteView plaintext) {
  ++send_counter_;
  return crypto::aead_seal(send_key_, counter_nonce(send_counter_), plaintext).encode();
}

Bytes SecureSession::recv(ByteView frame) {
  crypto::SealedPacket packet;
  try {
    packet = crypto::SealedPacket::decode(frame);
  } catch (const Error&) {
    throw Error(Errc::AuthenticationFailure, "undecodable frame");
  }
  auto plain = crypto::aead_open(recv_key_, packet);
  auto counter = nonce_counter(packet.nonce);
  if (counter <= recv_counter_) throw Error(Errc::ReplayDetected);
  if (counter != recv_counter_ + 1) throw Error(Errc::SequenceGap);
  recv_counter_ = counter;
  return plain;
}

SessionPair session_establish(chip::ChipClient& initiator, chip::ChipClient& responder,
                              RandomSource& rng) {
  auto nonce_a = rng.bytes(crypto::kNonceSize);
  auto nonce_b = rng.bytes(crypto::kNonceSize);
  constexpr std::string_view kLabel = "esp-link";

  auto link_a = initiator.derive_session_key(kLabel, nonce_a, nonce_b);
  auto link_b = responder.derive_session_key(kLabel, nonce_a, nonce_b);

  auto split = [](const crypto::SymmetricKey& link, std::string_view dir) {
    return crypto::kdf_derive(link.secret_bytes(), dir, {}, {});
  };
  auto a_to_b = split(link_a, "initiator->responder");
  auto b_to_a = split(link_a, "responder->initiator");
  auto b_view_a_to_b = split(link_b, "initiator->responder");
  auto b_view_b_to_a = split(link_b, "responder->initiator");

  // Key confirmation in both directions.
  auto transcript = concat({nonce_a, nonce_b});
  auto confirm_a = crypto::mac_compute(a_to_b, "link-confirm", transcript, 0);
  auto confirm_b = crypto::mac_compute(b_view_b_to_a, "link-confirm", transcript, 0);
  if (!crypto::mac_verify(b_view_a_to_b, "link-confirm", transcript, 0, confirm_a) ||
      !crypto::mac_verify(b_to_a, "link-confirm", transcript, 0, confirm_b)) {
    throw Error(Errc::AuthenticationFailure, "link key confirmation failed");
  }
  return SessionPair{SecureSession(a_to_b, b_to_a), SecureSession(b_view_b_to_a, b_view_a_to_b)};
}

}  // namespace gridtrust::esp
