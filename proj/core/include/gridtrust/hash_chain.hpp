#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridtrust/bytes.hpp"
#include "gridtrust/crypto.hpp"

namespace gridtrust {

// One link of an append-only hash chain. `body` is u64_be(index) || payload;
// this_hash = SHA3-512(prev_hash || body). The genesis prev_hash is all zero.
struct ChainEntry {
  Bytes body;
  crypto::Digest prev_hash{};
  crypto::Digest this_hash{};

  std::uint64_t index() const;
  ByteView payload() const;
};

struct ChainVerdict {
  bool intact = true;
  std::optional<std::size_t> first_bad_index;
};

// Storage shared by the provisioning ledger and the TE block store. Records
// are kept in their stored (serialized) form so that verification always
// re-parses exactly what would be written to disk.
class HashChain {
 public:
  const ChainEntry& append(ByteView payload);

  ChainVerdict verify() const;

  std::size_t size() const { return stored_.size(); }
  bool empty() const { return stored_.empty(); }
  // Parsed entry; throws Malformed for a record that no longer parses.
  ChainEntry entry(std::size_t i) const;
  crypto::Digest head() const;

  // One hex-encoded record per line: lp(body) || prev_hash || this_hash.
  std::vector<std::string> to_lines() const;
  static HashChain from_lines(const std::vector<std::string>& lines);

  void write(std::ostream& out) const;
  static HashChain read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  // Throws FileUnreadable.
  static HashChain load(const std::filesystem::path& path);

 private:
  struct Stored {
    Bytes raw;
    bool hex_ok = true;
  };
  static std::optional<ChainEntry> parse(const Stored& s);

  std::vector<Stored> stored_;
  std::optional<ChainEntry> last_;
};

}  // namespace gridtrust
