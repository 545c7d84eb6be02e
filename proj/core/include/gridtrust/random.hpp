#pragma once

#include <cstdint>
#include <mutex>

#include "gridtrust/bytes.hpp"

namespace gridtrust {

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }
  std::uint64_t next_u64();
};

// SHA3-512 counter-mode generator. Same seed, same stream; every scenario is
// reproducible from its seed.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(std::uint64_t seed);
  DeterministicRandom(std::uint64_t seed, std::string_view stream_label);

  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mutex mu_;
  Bytes seed_material_;
  std::uint64_t block_ = 0;
  Bytes buffer_;
  std::size_t offset_ = 0;
};

// Operating-system randomness (OpenSSL RAND_bytes).
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

}  // namespace gridtrust
