#include <gtest/gtest.h>

#include "gridtrust/crypto.hpp"
#include "gridtrust/error.hpp"
#include "gridtrust/random.hpp"
#include "test_util.hpp"

using namespace gridtrust;
using namespace gridtrust::crypto;
using testutil::hex;

TEST(Sha3, MatchesReferenceVectors) {
  auto rows = testutil::load_vectors("sha3_512_vectors.txt");
  ASSERT_GE(rows.size(), 7u);
  for (const auto& r : rows) EXPECT_EQ(to_hex(sha3_512(hex(r[0]))), r[1]);
}

TEST(Sha3, PartsConcatenate) {
  auto a = to_bytes("hello ");
  auto b = to_bytes("world");
  EXPECT_EQ(sha3_512({a, b}), sha3_512(to_bytes("hello world")));
}

TEST(Mac, MatchesReferenceVectors) {
  auto rows = testutil::load_vectors("mac_vectors.txt");
  ASSERT_GE(rows.size(), 10u);
  for (const auto& r : rows) {
    SymmetricKey key(hex(r[0]));
    auto tag = mac_compute(key, hex(r[1]), hex(r[3]), std::stoull(r[2]));
    EXPECT_EQ(to_hex(tag.bytes), r[4]);
  }
}

TEST(Mac, DeterministicAndCounterSensitive) {
  SymmetricKey zero;
  auto t0 = mac_compute(zero, "otp", Bytes{}, 0);
  EXPECT_TRUE(t0 == mac_compute(zero, "otp", Bytes{}, 0));
  EXPECT_FALSE(t0 == mac_compute(zero, "otp", Bytes{}, 1));
  EXPECT_FALSE(t0 == mac_compute(zero, "ot", Bytes{'p'}, 0));
}

TEST(Mac, RoundTripProperty) {
  DeterministicRandom rng(11);
  for (int i = 0; i < 10000; ++i) {
    SymmetricKey key(rng.bytes(64));
    auto msg = rng.bytes(rng.next_u64() % 64);
    auto ctx = rng.bytes(rng.next_u64() % 12);
    auto ctr = rng.next_u64();
    ASSERT_TRUE(mac_verify(key, ctx, msg, ctr, mac_compute(key, ctx, msg, ctr)));
  }
}

TEST(Mac, TamperProperty) {
  DeterministicRandom rng(12);
  SymmetricKey key(rng.bytes(64));
  for (int i = 0; i < 10000; ++i) {
    auto msg = rng.bytes(1 + rng.next_u64() % 63);
    auto ctr = rng.next_u64();
    auto tag = mac_compute(key, "ctx", msg, ctr);
    switch (i % 3) {
      case 0:
        msg[rng.next_u64() % msg.size()] ^= static_cast<std::uint8_t>(1u << (rng.next_u64() % 8));
        break;
      case 1:
        ctr ^= 1ULL << (rng.next_u64() % 64);
        break;
      default:
        tag.bytes[rng.next_u64() % kMacTagSize] ^= static_cast<std::uint8_t>(1u << (rng.next_u64() % 8));
    }
    ASSERT_FALSE(mac_verify(key, "ctx", msg, ctr, tag)) << i;
  }
}

TEST(Kdf, MatchesReferenceVectors) {
  auto rows = testutil::load_vectors("kdf_vectors.txt");
  ASSERT_GE(rows.size(), 10u);
  for (const auto& r : rows) {
    auto k = kdf_derive(hex(r[0]), hex(r[1]), hex(r[2]), hex(r[3]));
    EXPECT_EQ(to_hex(k.secret_bytes()), r[4]);
  }
}

TEST(Kdf, LabelsSeparateAndEmptySecretRejected) {
  auto s = to_bytes("secret");
  EXPECT_FALSE(kdf_derive(s, "a", {}, {}) == kdf_derive(s, "b", {}, {}));
  EXPECT_TRUE(kdf_derive(s, "a", {}, {}) == kdf_derive(s, "a", {}, {}));
  try {
    kdf_derive(Bytes{}, "a", {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptySecret);
  }
}

TEST(Ed25519, MatchesVectors) {
  auto rows = testutil::load_vectors("ed25519_vectors.txt");
  ASSERT_GE(rows.size(), 3u);
  for (const auto& r : rows) {
    auto kp = keypair_generate(hex(r[0]));
    EXPECT_EQ(to_hex(kp.public_key), r[1]);
    auto sig = sign(kp.private_seed, hex(r[2]));
    EXPECT_EQ(to_hex(sig.bytes), r[3]);
    EXPECT_TRUE(verify(kp.public_key, hex(r[2]), sig));
  }
}

TEST(Ed25519, BadSeedLength) {
  try {
    keypair_generate(Bytes(31, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadSeedLength);
  }
}

TEST(Ed25519, VerifyNeverThrowsOnGarbage) {
  Bytes msg = to_bytes("m");
  EXPECT_FALSE(verify(ByteView(Bytes(31, 1)), msg, ByteView(Bytes(64, 0))));
  EXPECT_FALSE(verify(ByteView(Bytes(32, 0xff)), msg, ByteView(Bytes(64, 0xff))));
  EXPECT_FALSE(verify(ByteView(Bytes(32, 1)), msg, ByteView(Bytes(63, 0))));
}

TEST(Ed25519, RoundTripAndFlipProperty) {
  DeterministicRandom rng(13);
  for (int i = 0; i < 300; ++i) {
    auto kp = keypair_generate(rng.bytes(32));
    auto msg = rng.bytes(1 + rng.next_u64() % 100);
    auto sig = sign(kp.private_seed, msg);
    ASSERT_TRUE(verify(kp.public_key, msg, sig));
    msg[rng.next_u64() % msg.size()] ^= static_cast<std::uint8_t>(1u << (rng.next_u64() % 8));
    ASSERT_FALSE(verify(kp.public_key, msg, sig));
  }
}

TEST(Aead, MatchesReferenceVectors) {
  auto rows = testutil::load_vectors("aead_vectors.txt");
  ASSERT_GE(rows.size(), 6u);
  for (const auto& r : rows) {
    SymmetricKey key(hex(r[0]));
    auto nonce = to_array<kNonceSize>(hex(r[1]));
    auto packet = aead_seal(key, nonce, hex(r[2]));
    EXPECT_EQ(to_hex(packet.ciphertext), r[3]);
    EXPECT_EQ(to_hex(packet.tag.bytes), r[4]);
    EXPECT_EQ(aead_open(key, packet), hex(r[2]));
  }
}

TEST(Aead, AnySingleByteCorruptionFails) {
  DeterministicRandom rng(14);
  SymmetricKey key(rng.bytes(64));
  auto packet = aead_seal(key, rng.array<kNonceSize>(), rng.bytes(90));
  auto encoded = packet.encode();
  // Skip the 4-byte ciphertext length: altering it breaks decoding itself.
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    auto bad = encoded;
    bad[i] ^= 0x01;
    bool rejected = false;
    try {
      aead_open(key, SealedPacket::decode(bad));
    } catch (const Error& e) {
      rejected = e.code() == Errc::AuthenticationFailure || e.code() == Errc::Malformed;
    }
    ASSERT_TRUE(rejected) << "byte " << i;
  }
}

TEST(Aead, WrongKeyFails) {
  DeterministicRandom rng(15);
  SymmetricKey a(rng.bytes(64));
  SymmetricKey b(rng.bytes(64));
  auto packet = aead_seal(a, rng.array<kNonceSize>(), to_bytes("payload"));
  EXPECT_THROW(aead_open(b, packet), Error);
}

TEST(ConstantTime, Equality) {
  EXPECT_TRUE(constant_time_equal(Bytes{1, 2}, Bytes{1, 2}));
  EXPECT_FALSE(constant_time_equal(Bytes{1, 2}, Bytes{1, 3}));
  EXPECT_FALSE(constant_time_equal(Bytes{1, 2}, Bytes{1}));
}

TEST(Random, DeterministicStreamsDiffer) {
  DeterministicRandom a(1, "x");
  DeterministicRandom b(1, "x");
  DeterministicRandom c(1, "y");
  auto va = a.bytes(100);
  EXPECT_EQ(va, b.bytes(100));
  EXPECT_NE(va, c.bytes(100));
}
