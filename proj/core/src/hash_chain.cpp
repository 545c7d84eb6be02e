#include "gridtrust/hash_chain.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "gridtrust/error.hpp"

namespace gridtrust {

std::uint64_t ChainEntry::index() const {
  ByteReader r(body);
  return r.u64();
}

ByteView ChainEntry::payload() const {
  if (body.size() < 8) return {};
  return ByteView(body).subspan(8);
}

const ChainEntry& HashChain::append(ByteView payload) {
  ChainEntry e;
  ByteWriter w;
  w.u64(stored_.size()).raw(payload);
  e.body = std::move(w).take();
  if (!stored_.empty()) e.prev_hash = head();
  e.this_hash = crypto::sha3_512({e.prev_hash, e.body});

  ByteWriter rec;
  rec.lp(e.body).raw(e.prev_hash).raw(e.this_hash);
  stored_.push_back({std::move(rec).take(), true});
  last_ = std::move(e);
  return *last_;
}

std::optional<ChainEntry> HashChain::parse(const Stored& s) {
  if (!s.hex_ok) return std::nullopt;
  try {
    ByteReader r(s.raw);
    ChainEntry e;
    e.body = r.lp();
    e.prev_hash = r.fixed<crypto::kDigestSize>();
    e.this_hash = r.fixed<crypto::kDigestSize>();
    r.expect_done();
    if (e.body.size() < 8) return std::nullopt;
    return e;
  } catch (const Error&) {
    return std::nullopt;
  }
}

ChainVerdict HashChain::verify() const {
  crypto::Digest expected_prev{};
  for (std::size_t i = 0; i < stored_.size(); ++i) {
    auto e = parse(stored_[i]);
    bool ok = e && e->index() == i && e->prev_hash == expected_prev &&
              crypto::sha3_512({e->prev_hash, e->body}) == e->this_hash;
    if (!ok) return {false, i};
    expected_prev = e->this_hash;
  }
  return {};
}

ChainEntry HashChain::entry(std::size_t i) const {
  auto e = parse(stored_.at(i));
  if (!e) throw Error(Errc::Malformed, "unparsable chain record " + std::to_string(i));
  return *e;
}

crypto::Digest HashChain::head() const {
  if (stored_.empty()) return {};
  return entry(stored_.size() - 1).this_hash;
}

std::vector<std::string> HashChain::to_lines() const {
  std::vector<std::string> out;
  out.reserve(stored_.size());
  for (const auto& s : stored_) out.push_back(to_hex(s.raw));
  return out;
}

HashChain HashChain::from_lines(const std::vector<std::string>& lines) {
  HashChain chain;
  for (const auto& line : lines) {
    Stored s;
    try {
      s.raw = from_hex(line);
    } catch (const Error&) {
      s.hex_ok = false;
    }
    chain.stored_.push_back(std::move(s));
  }
  return chain;
}

void HashChain::write(std::ostream& out) const {
  for (const auto& line : to_lines()) out << line << '\n';
}

HashChain HashChain::read(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(line);
  }
  return from_lines(lines);
}

void HashChain::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::FileUnreadable, path.string());
  write(out);
}

HashChain HashChain::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileUnreadable, path.string());
  return read(in);
}

}  // namespace gridtrust
