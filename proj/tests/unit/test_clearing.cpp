#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "gridtrust/clearing.hpp"
#include "gridtrust/error.hpp"
#include "gridtrust/random.hpp"

using namespace gridtrust;
using namespace gridtrust::te;

namespace {

Bid gen(std::string id, Watts q, MicroPrice p) {
  return Bid{std::move(id), BidKind::Generation, AssetType::DER, q, p, 1};
}
Bid con(std::string id, Watts q, MicroPrice p) {
  return Bid{std::move(id), BidKind::Consumption, AssetType::EV, q, p, 1};
}

Watts supply(const std::vector<Bid>& bids, MicroPrice p) {
  Watts s = 0;
  for (const auto& b : bids) {
    if (b.kind == BidKind::Generation && b.price_per_kwh <= p) s += b.quantity_w;
  }
  return s;
}
Watts demand(const std::vector<Bid>& bids, MicroPrice p) {
  Watts d = 0;
  for (const auto& b : bids) {
    if (b.kind == BidKind::Consumption && b.price_per_kwh >= p) d += b.quantity_w;
  }
  return d;
}

}  // namespace

TEST(Clearing, SymmetricPairClearsAtMidpoint) {
  std::vector<Bid> bids{gen("g", 2000, parse_price("0.10")), con("c", 2000, parse_price("0.20"))};
  auto r = clear_bids(1, bids);
  EXPECT_EQ(r.clearing_price, parse_price("0.15"));
  EXPECT_EQ(r.iterations_used, 1u);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.imbalance_w, 0);
  EXPECT_EQ(r.dispatch.at("g").real_power_w, 2000);
  EXPECT_EQ(r.dispatch.at("c").real_power_w, -2000);
}

TEST(Clearing, ThreeProsumerBook) {
  std::vector<Bid> bids{gen("alice", 2500, parse_price("0.08")),
                        gen("bob", 1500, parse_price("0.10")),
                        con("carol", 3000, parse_price("0.20"))};
  auto r = clear_bids(1, bids);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations_used, 100u);
  EXPECT_EQ(r.clearing_price, parse_price("0.10"));
  // Long side (4000 W of generation) rationed pro rata to 3000 W.
  EXPECT_EQ(r.dispatch.at("alice").real_power_w, 1875);
  EXPECT_EQ(r.dispatch.at("bob").real_power_w, 1125);
  EXPECT_EQ(r.dispatch.at("carol").real_power_w, -3000);
}

TEST(Clearing, MissingSideThrowsNoBids) {
  std::vector<Bid> only_gen{gen("g", 100, 1000)};
  try {
    clear_bids(1, only_gen);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoBids);
  }
  std::vector<Bid> other_round{gen("g", 100, 1000), con("c", 100, 2000)};
  EXPECT_THROW(clear_bids(2, other_round), Error);
}

TEST(Clearing, NonCrossingBookDoesNotConverge) {
  std::vector<Bid> bids{gen("g", 1000, parse_price("0.30")), con("c", 1000, parse_price("0.10"))};
  auto r = clear_bids(1, bids);
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(r.dispatch.empty());
}

TEST(Clearing, ResultRoundTrip) {
  std::vector<Bid> bids{gen("g", 2000, 100000), con("c", 1500, 200000)};
  auto r = clear_bids(1, bids);
  EXPECT_EQ(ClearingResult::decode(r.encode()), r);
}

TEST(Bid, ValidateAndCodec) {
  auto b = gen("g", 100, 1);
  EXPECT_EQ(Bid::decode(b.encode()), b);
  EXPECT_NO_THROW(b.validate());
  auto bad = b;
  bad.quantity_w = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = b;
  bad.price_per_kwh = -1;
  EXPECT_THROW(bad.validate(), Error);
  bad = b;
  bad.prosumer_id.clear();
  EXPECT_THROW(bad.validate(), Error);
  try {
    Bid::decode(Bytes{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedBid);
  }
}

TEST(Price, ParseAndFormat) {
  EXPECT_EQ(parse_price("0.15"), 150000);
  EXPECT_EQ(parse_price("1"), 1000000);
  EXPECT_EQ(parse_price("0.000001"), 1);
  EXPECT_EQ(format_price(150000), "0.150000");
  EXPECT_THROW(parse_price("0.0000001"), Error);
  EXPECT_THROW(parse_price("abc"), Error);
  EXPECT_EQ(bid_kind_from_string("consumption"), BidKind::Consumption);
  EXPECT_EQ(asset_type_from_string(to_string(AssetType::ControlledLoad)), AssetType::ControlledLoad);
}

// Random books: every property is checked against the book itself.
TEST(Clearing, RandomBookProperties) {
  DeterministicRandom rng(404);
  int crossed = 0;
  for (int n = 0; n < 10000; ++n) {
    std::vector<Bid> bids;
    int ng = 1 + static_cast<int>(rng.next_u64() % 6);
    int nc = 1 + static_cast<int>(rng.next_u64() % 6);
    for (int i = 0; i < ng; ++i) {
      bids.push_back(gen("g" + std::to_string(i), 1 + static_cast<Watts>(rng.next_u64() % 5000),
                         static_cast<MicroPrice>(rng.next_u64() % 400000)));
    }
    for (int i = 0; i < nc; ++i) {
      bids.push_back(con("c" + std::to_string(i), 1 + static_cast<Watts>(rng.next_u64() % 5000),
                         static_cast<MicroPrice>(rng.next_u64() % 400000)));
    }
    auto r = clear_bids(1, bids);
    ASSERT_LE(r.iterations_used, 100u);

    MicroPrice lo = bids[0].price_per_kwh;
    MicroPrice hi = lo;
    for (const auto& b : bids) {
      lo = std::min(lo, b.price_per_kwh);
      hi = std::max(hi, b.price_per_kwh);
    }
    ASSERT_GE(r.clearing_price, lo);
    ASSERT_LE(r.clearing_price, hi);

    // Some price in the book's range trades a positive volume iff the
    // curves cross; the clearing must then trade too.
    Watts best = 0;
    for (const auto& b : bids) {
      best = std::max(best, std::min(supply(bids, b.price_per_kwh), demand(bids, b.price_per_kwh)));
    }
    if (best > 0) {
      ++crossed;
      ASSERT_FALSE(r.dispatch.empty()) << n;
    }

    Watts g = 0;
    Watts c = 0;
    for (const auto& b : bids) {
      auto it = r.dispatch.find(b.prosumer_id);
      Watts d = it == r.dispatch.end() ? 0 : it->second.real_power_w;
      if (b.kind == BidKind::Generation) {
        ASSERT_GE(d, 0);
        ASSERT_LE(d, b.quantity_w);
        if (d > 0) ASSERT_LE(b.price_per_kwh, r.clearing_price);
        g += d;
      } else {
        ASSERT_LE(d, 0);
        ASSERT_LE(-d, b.quantity_w);
        if (d < 0) ASSERT_GE(b.price_per_kwh, r.clearing_price);
        c -= d;
      }
    }
    ASSERT_EQ(g - c, r.imbalance_w);
    if (!r.dispatch.empty()) {
      ASSERT_TRUE(r.converged);
      ASSERT_LE(std::abs(r.imbalance_w), 1);
      ASSERT_EQ(g, std::min(supply(bids, r.clearing_price), demand(bids, r.clearing_price)));
    }

    auto shuffled = bids;
    std::reverse(shuffled.begin(), shuffled.end());
    ASSERT_EQ(clear_bids(1, shuffled), r);
  }
  EXPECT_GT(crossed, 1000);
}
