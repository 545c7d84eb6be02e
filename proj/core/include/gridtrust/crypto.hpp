#pragma once

// Cryptographic primitives used across the framework. Everything symmetric is
// built on SHA3-512; signatures are ED25519 (RFC 8032). All functions are pure
// and safe to call concurrently.

#include <array>
#include <cstdint>
#include <string_view>

#include "gridtrust/bytes.hpp"

namespace gridtrust::crypto {

inline constexpr std::size_t kSymmetricKeySize = 64;
inline constexpr std::size_t kMacTagSize = 32;
inline constexpr std::size_t kSeedSize = 32;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kNonceSize = 24;
inline constexpr std::size_t kDigestSize = 64;

using Digest = std::array<std::uint8_t, kDigestSize>;
using Nonce = std::array<std::uint8_t, kNonceSize>;
using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using Seed = std::array<std::uint8_t, kSeedSize>;

// SHA3-512 over the concatenation of `parts`.
Digest sha3_512(std::initializer_list<ByteView> parts);
inline Digest sha3_512(ByteView data) { return sha3_512({data}); }

// 64-byte secret. Deliberately has no stream operator or to_string; the only
// way to reach the bytes is the explicit secret_bytes() accessor.
class SymmetricKey {
 public:
  SymmetricKey() = default;
  explicit SymmetricKey(ByteView bytes);
  explicit SymmetricKey(const std::array<std::uint8_t, kSymmetricKeySize>& bytes) : bytes_(bytes) {}

  ByteView secret_bytes() const { return bytes_; }

  friend bool operator==(const SymmetricKey&, const SymmetricKey&) = default;

 private:
  std::array<std::uint8_t, kSymmetricKeySize> bytes_{};
};

struct MacTag {
  std::array<std::uint8_t, kMacTagSize> bytes{};

  // Constant-time comparison.
  friend bool operator==(const MacTag& a, const MacTag& b);
};

struct Signature {
  std::array<std::uint8_t, kSignatureSize> bytes{};
  friend bool operator==(const Signature&, const Signature&) = default;
};

struct KeyPair {
  Seed private_seed{};
  PublicKey public_key{};
};

struct SealedPacket {
  Nonce nonce{};
  Bytes ciphertext;
  MacTag tag;

  Bytes encode() const;
  static SealedPacket decode(ByteView data);
  static SealedPacket read(ByteReader& r);
  void write(ByteWriter& w) const;

  friend bool operator==(const SealedPacket&, const SealedPacket&) = default;
};

// First 32 bytes of SHA3-512(key || context || counter_be64 || message).
MacTag mac_compute(const SymmetricKey& key, ByteView context, ByteView message,
                   std::uint64_t counter);
inline MacTag mac_compute(const SymmetricKey& key, std::string_view context, ByteView message,
                          std::uint64_t counter) {
  return mac_compute(key, as_bytes(context), message, counter);
}

bool mac_verify(const SymmetricKey& key, ByteView context, ByteView message,
                std::uint64_t counter, const MacTag& tag);
inline bool mac_verify(const SymmetricKey& key, std::string_view context, ByteView message,
                       std::uint64_t counter, const MacTag& tag) {
  return mac_verify(key, as_bytes(context), message, counter, tag);
}

// SHA3-512(label || secret || nonce_a || nonce_b). Throws EmptySecret.
SymmetricKey kdf_derive(ByteView secret, ByteView label, ByteView nonce_a, ByteView nonce_b);
inline SymmetricKey kdf_derive(ByteView secret, std::string_view label, ByteView nonce_a,
                               ByteView nonce_b) {
  return kdf_derive(secret, as_bytes(label), nonce_a, nonce_b);
}

// RFC 8032 key derivation. Throws BadSeedLength.
KeyPair keypair_generate(ByteView seed);

Signature sign(const Seed& private_seed, ByteView message);

// Never throws: malformed keys or signatures simply fail verification.
bool verify(ByteView public_key, ByteView message, ByteView signature);
inline bool verify(const PublicKey& public_key, ByteView message, const Signature& signature) {
  return verify(ByteView{public_key}, message, ByteView{signature.bytes});
}

// Encrypt-then-MAC over a SHA3-512 keystream. The caller guarantees nonce
// uniqueness per key.
SealedPacket aead_seal(const SymmetricKey& key, const Nonce& nonce, ByteView plaintext);
// Throws AuthenticationFailure if any field of the packet was altered.
Bytes aead_open(const SymmetricKey& key, const SealedPacket& packet);

bool constant_time_equal(ByteView a, ByteView b);

}  // namespace gridtrust::crypto
