#pragma once

// Market clearing for one round of bids. The pricing rule is a bisection
// tatonnement on integer micro-prices; it is isolated here so a different
// distributed pricing algorithm can be swapped in behind clear_bids().

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gridtrust/bytes.hpp"

namespace gridtrust::te {

using Watts = std::int64_t;
// Currency micro-units per kWh (0.15 -> 150000).
using MicroPrice = std::int64_t;

enum class BidKind : std::uint8_t { Generation = 0, Consumption = 1 };
enum class AssetType : std::uint8_t { DER = 0, EV = 1, ControlledLoad = 2, Other = 3 };

std::string_view to_string(BidKind k);
std::string_view to_string(AssetType a);
BidKind bid_kind_from_string(std::string_view s);
AssetType asset_type_from_string(std::string_view s);

// Parses a decimal price such as "0.15" exactly into micro-units.
MicroPrice parse_price(std::string_view text);
std::string format_price(MicroPrice p);

struct Bid {
  std::string prosumer_id;
  BidKind kind = BidKind::Generation;
  AssetType asset_type = AssetType::DER;
  Watts quantity_w = 0;
  MicroPrice price_per_kwh = 0;
  std::uint32_t round = 0;

  // Throws MalformedBid.
  void validate() const;
  // Canonical bytes signed by the chip: lp(prosumer) || u8 kind || u8 asset ||
  // i64 quantity || i64 price || u32 round.
  Bytes encode() const;
  static Bid decode(ByteView data);

  friend bool operator==(const Bid&, const Bid&) = default;
};

struct DispatchSetpoint {
  std::string prosumer_id;
  // Positive for generation, negative for consumption.
  Watts real_power_w = 0;
  std::uint32_t round = 0;

  Bytes encode() const;
  static DispatchSetpoint decode(ByteView data);
  friend bool operator==(const DispatchSetpoint&, const DispatchSetpoint&) = default;
};

struct ClearingParams {
  Watts balance_tolerance_w = 1;
  std::uint32_t max_iterations = 100;
};

struct ClearingResult {
  std::uint32_t round = 0;
  MicroPrice clearing_price = 0;
  std::uint32_t iterations_used = 0;
  std::map<std::string, DispatchSetpoint> dispatch;
  bool converged = false;
  // Generation minus consumption across the dispatch.
  Watts imbalance_w = 0;

  Bytes encode() const;
  static ClearingResult decode(ByteView data);
  friend bool operator==(const ClearingResult&, const ClearingResult&) = default;
};

// Throws NoBids unless both sides have at least one bid. A book whose price
// ranges never cross comes back with converged=false and no dispatch.
ClearingResult clear_bids(std::uint32_t round, std::span<const Bid> bids,
                          const ClearingParams& params = {});

}  // namespace gridtrust::te
