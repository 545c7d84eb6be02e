#include "gridtrust/bytes.hpp"

#include <algorithm>

#include "gridtrust/error.hpp"

namespace gridtrust {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::Malformed, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::Malformed, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

void throw_size_mismatch(std::size_t expected, std::size_t actual) {
  throw Error(Errc::Malformed,
              "expected " + std::to_string(expected) + " bytes, got " + std::to_string(actual));
}

Bytes concat(std::initializer_list<ByteView> parts) {
  Bytes out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

bool contains_substring_of(ByteView haystack, ByteView needle, std::size_t min_len) {
  if (needle.size() < min_len || haystack.size() < min_len) return false;
  for (std::size_t start = 0; start + min_len <= needle.size(); ++start) {
    auto window = needle.subspan(start, min_len);
    if (std::search(haystack.begin(), haystack.end(), window.begin(), window.end()) !=
        haystack.end()) {
      return true;
    }
  }
  return false;
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

ByteWriter& ByteWriter::raw(ByteView v) {
  out_.insert(out_.end(), v.begin(), v.end());
  return *this;
}

ByteWriter& ByteWriter::lp(ByteView v) {
  u32(static_cast<std::uint32_t>(v.size()));
  return raw(v);
}

ByteView ByteReader::take(std::size_t n) {
  if (n > remaining()) throw Error(Errc::Malformed, "truncated input");
  auto v = in_.subspan(pos_, n);
  pos_ += n;
  return v;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto v = take(2);
  return static_cast<std::uint16_t>((v[0] << 8) | v[1]);
}

std::uint32_t ByteReader::u32() {
  auto v = take(4);
  std::uint32_t out = 0;
  for (auto b : v) out = (out << 8) | b;
  return out;
}

std::uint64_t ByteReader::u64() {
  auto v = take(8);
  std::uint64_t out = 0;
  for (auto b : v) out = (out << 8) | b;
  return out;
}

Bytes ByteReader::raw(std::size_t n) {
  auto v = take(n);
  return {v.begin(), v.end()};
}

Bytes ByteReader::lp() {
  auto n = u32();
  return raw(n);
}

std::string ByteReader::lp_string() {
  auto b = lp();
  return {b.begin(), b.end()};
}

void ByteReader::expect_done() const {
  if (!done()) throw Error(Errc::Malformed, "trailing bytes");
}

}  // namespace gridtrust
