#include "gridtrust/clearing.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <limits>
#include <optional>
#include <numeric>

#include "gridtrust/error.hpp"

namespace gridtrust::te {

std::string_view to_string(BidKind k) {
  return k == BidKind::Generation ? "generation" : "consumption";
}

std::string_view to_string(AssetType a) {
  switch (a) {
    case AssetType::DER:
      return "DER";
    case AssetType::EV:
      return "EV";
    case AssetType::ControlledLoad:
      return "ControlledLoad";
    case AssetType::Other:
      return "Other";
  }
  return "Other";
}

BidKind bid_kind_from_string(std::string_view s) {
  if (s == "generation") return BidKind::Generation;
  if (s == "consumption") return BidKind::Consumption;
  throw Error(Errc::MalformedBid, "bid kind '" + std::string(s) + "'");
}

AssetType asset_type_from_string(std::string_view s) {
  for (auto a : {AssetType::DER, AssetType::EV, AssetType::ControlledLoad, AssetType::Other}) {
    if (s == to_string(a)) return a;
  }
  throw Error(Errc::MalformedBid, "asset type '" + std::string(s) + "'");
}

MicroPrice parse_price(std::string_view text) {
  bool negative = !text.empty() && text.front() == '-';
  if (negative) text.remove_prefix(1);
  auto dot = text.find('.');
  auto whole_part = text.substr(0, dot);
  std::string frac_part = dot == std::string_view::npos ? "" : std::string(text.substr(dot + 1));
  if (whole_part.empty() && frac_part.empty()) throw Error(Errc::Malformed, "empty price");
  if (frac_part.size() > 6) throw Error(Errc::Malformed, "price finer than 1e-6");
  frac_part.resize(6, '0');
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  auto parse = [](std::string_view s, std::int64_t& out) {
    if (s.empty()) {
      out = 0;
      return;
    }
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || p != s.data() + s.size()) throw Error(Errc::Malformed, "bad price");
  };
  parse(whole_part, whole);
  parse(frac_part, frac);
  MicroPrice v = whole * 1'000'000 + frac;
  return negative ? -v : v;
}

std::string format_price(MicroPrice p) {
  std::string sign = p < 0 ? "-" : "";
  auto a = p < 0 ? -p : p;
  auto frac = std::to_string(a % 1'000'000);
  frac.insert(0, 6 - frac.size(), '0');
  return sign + std::to_string(a / 1'000'000) + "." + frac;
}

void Bid::validate() const {
  if (prosumer_id.empty()) throw Error(Errc::MalformedBid, "empty prosumer id");
  if (quantity_w <= 0) throw Error(Errc::MalformedBid, "non-positive quantity");
  if (price_per_kwh < 0) throw Error(Errc::MalformedBid, "negative price");
}

Bytes Bid::encode() const {
  ByteWriter w;
  w.lp(prosumer_id)
      .u8(static_cast<std::uint8_t>(kind))
      .u8(static_cast<std::uint8_t>(asset_type))
      .i64(quantity_w)
      .i64(price_per_kwh)
      .u32(round);
  return std::move(w).take();
}

Bid Bid::decode(ByteView data) {
  try {
    ByteReader r(data);
    Bid b;
    b.prosumer_id = r.lp_string();
    auto kind = r.u8();
    auto asset = r.u8();
    if (kind > 1 || asset > 3) throw Error(Errc::MalformedBid, "bad enum");
    b.kind = static_cast<BidKind>(kind);
    b.asset_type = static_cast<AssetType>(asset);
    b.quantity_w = r.i64();
    b.price_per_kwh = r.i64();
    b.round = r.u32();
    r.expect_done();
    return b;
  } catch (const Error& e) {
    throw Error(Errc::MalformedBid, e.what());
  }
}

Bytes DispatchSetpoint::encode() const {
  ByteWriter w;
  w.lp(prosumer_id).i64(real_power_w).u32(round);
  return std::move(w).take();
}

DispatchSetpoint DispatchSetpoint::decode(ByteView data) {
  ByteReader r(data);
  DispatchSetpoint d;
  d.prosumer_id = r.lp_string();
  d.real_power_w = r.i64();
  d.round = r.u32();
  r.expect_done();
  return d;
}

Bytes ClearingResult::encode() const {
  ByteWriter w;
  w.u32(round).i64(clearing_price).u32(iterations_used).u8(converged ? 1 : 0).i64(imbalance_w);
  w.u32(static_cast<std::uint32_t>(dispatch.size()));
  for (const auto& [id, d] : dispatch) w.lp(d.encode());
  return std::move(w).take();
}

ClearingResult ClearingResult::decode(ByteView data) {
  ByteReader r(data);
  ClearingResult c;
  c.round = r.u32();
  c.clearing_price = r.i64();
  c.iterations_used = r.u32();
  c.converged = r.u8() != 0;
  c.imbalance_w = r.i64();
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto d = DispatchSetpoint::decode(r.lp());
    c.dispatch.emplace(d.prosumer_id, d);
  }
  r.expect_done();
  return c;
}

namespace {

__extension__ typedef __int128 Wide;

struct Curves {
  std::vector<const Bid*> generation;
  std::vector<const Bid*> consumption;

  Watts supply(MicroPrice p) const {
    Watts s = 0;
    for (auto* b : generation) {
      if (b->price_per_kwh <= p) s += b->quantity_w;
    }
    return s;
  }
  Watts demand(MicroPrice p) const {
    Watts d = 0;
    for (auto* b : consumption) {
      if (b->price_per_kwh >= p) d += b->quantity_w;
    }
    return d;
  }
};

// Scales `side` down to `total` watts in proportion to quantity; leftover
// watts go to the largest fractional remainders (ties by prosumer id).
std::vector<Watts> pro_rata(const std::vector<const Bid*>& side, Watts total) {
  Wide sum = 0;
  for (auto* b : side) sum += b->quantity_w;
  std::vector<Watts> out(side.size(), 0);
  if (sum == 0) return out;
  std::vector<std::pair<Wide, std::size_t>> remainders;
  Watts assigned = 0;
  for (std::size_t i = 0; i < side.size(); ++i) {
    Wide num = static_cast<Wide>(side[i]->quantity_w) * total;
    out[i] = static_cast<Watts>(num / sum);
    assigned += out[i];
    remainders.emplace_back(num % sum, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    ++out[remainders[k].second];
  }
  return out;
}

}  // namespace

ClearingResult clear_bids(std::uint32_t round, std::span<const Bid> bids,
                          const ClearingParams& params) {
  Curves curves;
  for (const auto& b : bids) {
    if (b.round != round) continue;
    (b.kind == BidKind::Generation ? curves.generation : curves.consumption).push_back(&b);
  }
  if (curves.generation.empty() || curves.consumption.empty()) {
    throw Error(Errc::NoBids, "round " + std::to_string(round));
  }
  auto by_id = [](const Bid* a, const Bid* b) { return a->prosumer_id < b->prosumer_id; };
  std::sort(curves.generation.begin(), curves.generation.end(), by_id);
  std::sort(curves.consumption.begin(), curves.consumption.end(), by_id);

  MicroPrice lo = std::numeric_limits<MicroPrice>::max();
  MicroPrice hi = std::numeric_limits<MicroPrice>::min();
  for (const auto& b : bids) {
    if (b.round != round) continue;
    lo = std::min(lo, b.price_per_kwh);
    hi = std::max(hi, b.price_per_kwh);
  }

  ClearingResult result;
  result.round = round;
  auto excess = [&](MicroPrice p) { return curves.demand(p) - curves.supply(p); };

  std::optional<MicroPrice> balanced;
  while (result.iterations_used < params.max_iterations) {
    MicroPrice mid = lo + (hi - lo) / 2;
    ++result.iterations_used;
    Watts e = excess(mid);
    if (std::abs(e) <= params.balance_tolerance_w) {
      balanced = mid;
      break;
    }
    if (e > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1) break;
  }

  MicroPrice price;
  if (balanced) {
    price = *balanced;
  } else {
    // The bracket collapsed onto a step of the curves; take the side that
    // trades more, then the smaller imbalance.
    auto traded = [&](MicroPrice p) { return std::min(curves.demand(p), curves.supply(p)); };
    price = lo;
    if (traded(hi) > traded(lo) ||
        (traded(hi) == traded(lo) && std::abs(excess(hi)) < std::abs(excess(lo)))) {
      price = hi;
    }
  }
  result.clearing_price = price;

  std::vector<const Bid*> gen;
  std::vector<const Bid*> con;
  for (auto* b : curves.generation) {
    if (b->price_per_kwh <= price) gen.push_back(b);
  }
  for (auto* b : curves.consumption) {
    if (b->price_per_kwh >= price) con.push_back(b);
  }
  Watts supply = curves.supply(price);
  Watts demand = curves.demand(price);
  Watts traded = std::min(supply, demand);
  if (traded <= 0) {
    result.converged = false;
    return result;
  }

  auto gen_alloc = pro_rata(gen, traded);
  auto con_alloc = pro_rata(con, traded);
  auto add = [&](const Bid* b, Watts w) {
    auto& d = result.dispatch[b->prosumer_id];
    d.prosumer_id = b->prosumer_id;
    d.round = round;
    d.real_power_w += w;
  };
  Watts total_gen = 0;
  Watts total_con = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    add(gen[i], gen_alloc[i]);
    total_gen += gen_alloc[i];
  }
  for (std::size_t i = 0; i < con.size(); ++i) {
    add(con[i], -con_alloc[i]);
    total_con += con_alloc[i];
  }
  result.imbalance_w = total_gen - total_con;
  result.converged = std::abs(result.imbalance_w) <= params.balance_tolerance_w;
  return result;
}

}  // namespace gridtrust::te
