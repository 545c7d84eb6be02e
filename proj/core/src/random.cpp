#include "gridtrust/random.hpp"

#include <openssl/rand.h>

#include <stdexcept>

#include "gridtrust/crypto.hpp"

namespace gridtrust {

std::uint64_t RandomSource::next_u64() {
  auto b = array<8>();
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed)
    : DeterministicRandom(seed, "gridtrust-drbg") {}

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view stream_label) {
  ByteWriter w;
  w.lp(stream_label).u64(seed);
  seed_material_ = std::move(w).take();
}

void DeterministicRandom::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mu_);
  for (auto& b : out) {
    if (offset_ == buffer_.size()) {
      ByteWriter ctr;
      ctr.u64(block_++);
      auto d = crypto::sha3_512({seed_material_, ctr.bytes()});
      buffer_.assign(d.begin(), d.end());
      offset_ = 0;
    }
    b = buffer_[offset_++];
  }
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
}

}  // namespace gridtrust
