#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridtrust {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

// Throws Error{Errc::Malformed} unless data.size() == N.
template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView data);

[[noreturn]] void throw_size_mismatch(std::size_t expected, std::size_t actual);

Bytes concat(std::initializer_list<ByteView> parts);

// True if `haystack` contains any contiguous run of `min_len` bytes taken from
// `needle`.
bool contains_substring_of(ByteView haystack, ByteView needle, std::size_t min_len);

// Big-endian, length-prefixed writer used by every canonical encoding in the
// project. Variable-length fields are prefixed with a u32 length.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v);
  ByteWriter& u16(std::uint16_t v);
  ByteWriter& u32(std::uint32_t v);
  ByteWriter& u64(std::uint64_t v);
  ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter& raw(ByteView v);
  ByteWriter& lp(ByteView v);
  ByteWriter& lp(std::string_view s) { return lp(as_bytes(s)); }

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

// Reader counterpart; throws Error{Errc::Malformed} on underflow.
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  Bytes raw(std::size_t n);
  template <std::size_t N>
  std::array<std::uint8_t, N> fixed() {
    std::array<std::uint8_t, N> out{};
    auto v = take(N);
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  Bytes lp();
  std::string lp_string();

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }
  // Throws Malformed if trailing bytes remain.
  void expect_done() const;

 private:
  ByteView take(std::size_t n);

  ByteView in_;
  std::size_t pos_ = 0;
};

template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView data) {
  if (data.size() != N) throw_size_mismatch(N, data.size());
  std::array<std::uint8_t, N> out{};
  std::copy(data.begin(), data.end(), out.begin());
  return out;
}

}  // namespace gridtrust
