#include "gridtrust/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <memory>

#include "gridtrust/error.hpp"

namespace gridtrust::crypto {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
struct PkeyDeleter {
  void operator()(EVP_PKEY* key) const { EVP_PKEY_free(key); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

std::array<std::uint8_t, 8> be64(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
  return out;
}

constexpr std::string_view kStreamLabel = "aead-stream";
constexpr std::string_view kAeadMacLabel = "aead-mac";
constexpr std::string_view kAeadContext = "aead";

SymmetricKey aead_mac_key(const SymmetricKey& key, const Nonce& nonce) {
  return kdf_derive(key.secret_bytes(), kAeadMacLabel, nonce, {});
}

void apply_keystream(const SymmetricKey& key, const Nonce& nonce, std::span<std::uint8_t> data) {
  std::uint64_t block = 0;
  for (std::size_t off = 0; off < data.size(); off += kSymmetricKeySize, ++block) {
    auto ks = kdf_derive(key.secret_bytes(), kStreamLabel, nonce, be64(block));
    auto stream = ks.secret_bytes();
    std::size_t n = std::min(kSymmetricKeySize, data.size() - off);
    for (std::size_t i = 0; i < n; ++i) data[off + i] ^= stream[i];
  }
}

}  // namespace

Digest sha3_512(std::initializer_list<ByteView> parts) {
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha3_512(), nullptr) != 1) {
    throw std::runtime_error("SHA3-512 unavailable");
  }
  for (auto p : parts) {
    if (!p.empty()) EVP_DigestUpdate(ctx.get(), p.data(), p.size());
  }
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), out.data(), &len);
  return out;
}

SymmetricKey::SymmetricKey(ByteView bytes) : bytes_(to_array<kSymmetricKeySize>(bytes)) {}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

bool operator==(const MacTag& a, const MacTag& b) { return constant_time_equal(a.bytes, b.bytes); }

MacTag mac_compute(const SymmetricKey& key, ByteView context, ByteView message,
                   std::uint64_t counter) {
  auto ctr = be64(counter);
  auto full = sha3_512({key.secret_bytes(), context, ctr, message});
  MacTag tag;
  std::copy_n(full.begin(), kMacTagSize, tag.bytes.begin());
  return tag;
}

bool mac_verify(const SymmetricKey& key, ByteView context, ByteView message,
                std::uint64_t counter, const MacTag& tag) {
  return mac_compute(key, context, message, counter) == tag;
}

SymmetricKey kdf_derive(ByteView secret, ByteView label, ByteView nonce_a, ByteView nonce_b) {
  if (secret.empty()) throw Error(Errc::EmptySecret);
  return SymmetricKey(sha3_512({label, secret, nonce_a, nonce_b}));
}

KeyPair keypair_generate(ByteView seed) {
  if (seed.size() != kSeedSize) throw Error(Errc::BadSeedLength);
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
  if (!key) throw Error(Errc::MalformedKey);
  KeyPair pair;
  std::copy(seed.begin(), seed.end(), pair.private_seed.begin());
  std::size_t len = pair.public_key.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), pair.public_key.data(), &len) != 1 ||
      len != kPublicKeySize) {
    throw Error(Errc::MalformedKey);
  }
  return pair;
}

Signature sign(const Seed& private_seed, ByteView message) {
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, private_seed.data(),
                                        private_seed.size()));
  if (!key) throw Error(Errc::MalformedKey);
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    throw Error(Errc::MalformedKey);
  }
  Signature sig;
  std::size_t len = sig.bytes.size();
  if (EVP_DigestSign(ctx.get(), sig.bytes.data(), &len, message.data(), message.size()) != 1 ||
      len != kSignatureSize) {
    throw Error(Errc::MalformedKey, "signing failed");
  }
  return sig;
}

bool verify(ByteView public_key, ByteView message, ByteView signature) {
  if (public_key.size() != kPublicKeySize || signature.size() != kSignatureSize) return false;
  Pkey key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                       public_key.size()));
  if (!key) return false;
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

SealedPacket aead_seal(const SymmetricKey& key, const Nonce& nonce, ByteView plaintext) {
  SealedPacket packet;
  packet.nonce = nonce;
  packet.ciphertext.assign(plaintext.begin(), plaintext.end());
  apply_keystream(key, nonce, packet.ciphertext);
  packet.tag = mac_compute(aead_mac_key(key, nonce), kAeadContext,
                           concat({nonce, packet.ciphertext}), 0);
  return packet;
}

Bytes aead_open(const SymmetricKey& key, const SealedPacket& packet) {
  if (!mac_verify(aead_mac_key(key, packet.nonce), as_bytes(kAeadContext),
                  concat({packet.nonce, packet.ciphertext}), 0, packet.tag)) {
    throw Error(Errc::AuthenticationFailure);
  }
  Bytes plain = packet.ciphertext;
  apply_keystream(key, packet.nonce, plain);
  return plain;
}

void SealedPacket::write(ByteWriter& w) const {
  w.raw(nonce).lp(ciphertext).raw(tag.bytes);
}

SealedPacket SealedPacket::read(ByteReader& r) {
  SealedPacket p;
  p.nonce = r.fixed<kNonceSize>();
  p.ciphertext = r.lp();
  p.tag.bytes = r.fixed<kMacTagSize>();
  return p;
}

Bytes SealedPacket::encode() const {
  ByteWriter w;
  write(w);
  return std::move(w).take();
}

SealedPacket SealedPacket::decode(ByteView data) {
  ByteReader r(data);
  auto p = read(r);
  r.expect_done();
  return p;
}

}  // namespace gridtrust::crypto
