#pragma once

// Cryptographic constructions of the three-segment provisioning exchange.
// Both the chip and the registrar compute these; keeping them in one place
// guarantees the two sides agree byte for byte.

#include <cstdint>
#include <string>

#include "gridtrust/crypto.hpp"

namespace gridtrust::esp {

using crypto::Digest;
using crypto::MacTag;
using crypto::Nonce;
using crypto::PublicKey;
using crypto::SealedPacket;
using crypto::SymmetricKey;

// Body of segment 1: server_nonce || device_nonce || device_public_key || mutual_mac.
Bytes msg1_body(const Nonce& server_nonce, const Nonce& device_nonce,
                const PublicKey& device_public_key, const MacTag& mutual_mac);

// MAC the chip returns from provision_begin, keyed with its active config.
MacTag mutual_mac(const SymmetricKey& active_key, const Nonce& server_nonce,
                  const Nonce& device_nonce, const PublicKey& device_public_key);

SymmetricKey session_key(const SymmetricKey& active_key, const Nonce& server_nonce,
                         const Nonce& device_nonce);

// SHA3-512 over the raw bodies of segments 1 and 2.
Digest transcript_digest(ByteView msg1, ByteView msg2);

// Plaintext of the segment 2 key packet.
struct KeyPacket {
  SymmetricKey key;
  std::uint32_t config_id = 0;
  std::string device_id;

  Bytes encode() const;
  static KeyPacket decode(ByteView data);
};

MacTag install_ack(const SymmetricKey& new_key, const Digest& transcript);

struct ProofPair {
  MacTag old_tag;
  MacTag new_tag;
  friend bool operator==(const ProofPair&, const ProofPair&) = default;
};

// Old key first, then the new key chained over the old tag.
ProofPair supersession_proof(const SymmetricKey& old_key, const SymmetricKey& new_key,
                             const Digest& transcript);

// Plaintext of segment 3b, sealed under the new key. The inner old-key tag
// means the stream only verifies for a party holding both configurations.
struct CommitStream {
  Digest transcript{};
  std::uint32_t config_id = 0;
  MacTag old_key_tag;

  Bytes encode() const;
  static CommitStream decode(ByteView data);
};

MacTag commit_old_key_tag(const SymmetricKey& old_key, const Digest& transcript,
                          const ProofPair& proof, std::uint32_t config_id);

}  // namespace gridtrust::esp
