#include <doctest.h>

#include <cmath>
#include <vector>

#include <nftproj/errors.hpp>
#include <nftproj/metrics.hpp>
#include <nftproj/wei.hpp>

#include "test_util.hpp"

using namespace nftproj;
using testutil::Plateau;

namespace {

constexpr std::int64_t kInception = 1609459200;

SaleEvent sale(std::uint64_t token, std::int64_t day, const std::string& eth) {
  return SaleEvent{"c", token, kInception + day * 86400 + 3600, parse_eth(eth), 0};
}

}  // namespace

TEST_CASE("documented quarterly caps reproduce the documented growth percentages") {
  CHECK(std::abs(change_pct(24252.51, 117718.68) - 385.39) < 0.01);
  CHECK(std::abs(change_pct(117718.68, 196391.34) - 66.83) < 0.01);
  CHECK(std::abs(change_pct(196391.34, 307509.66) - 56.58) < 0.01);
  CHECK(change_pct(100.0, 50.0) == doctest::Approx(-50.0).epsilon(1e-12));
}

TEST_CASE("documented caps map to their documented tiers") {
  CHECK(tier(24252.51) == Tier::tier1);
  CHECK(tier(3123.25) == Tier::tier2);
  CHECK(tier(1251.49) == Tier::tier3);
  CHECK(tier(0.0) == Tier::tier3);
}

TEST_CASE("tier boundaries fall to the lower tier") {
  CHECK(tier(15000.0) == Tier::tier2);
  CHECK(tier(15000.1) == Tier::tier1);
  CHECK(tier(2000.0) == Tier::tier3);
  CHECK(tier(2000.1) == Tier::tier2);
}

TEST_CASE("regression stats on a hand example") {
  std::vector<double> actual{1, 2, 3};
  std::vector<double> predicted{1, 1, 1};
  auto stats = regression_stats(actual, predicted);
  CHECK(stats.mae == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(stats.mse == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(stats.rmse == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(stats.r2 == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(!stats.r2_degenerate);

  auto perfect = regression_stats(actual, actual);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.r2 == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> flat{2, 2, 2};
  auto degen = regression_stats(flat, predicted);
  CHECK(degen.r2_degenerate);
  CHECK(std::isnan(degen.r2));
  CHECK(degen.mae == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("abs_diff_pct") {
  CHECK(abs_diff_pct(100.0, 50.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(abs_diff_pct(100.0, 200.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(abs_diff_pct(100.0, 100.0) == 0.0);
  try {
    abs_diff_pct(0.0, 1.0);
    FAIL("expected zero_actual");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::zero_actual);
  }
}

TEST_CASE("quarter_stats sums carried values at the quarter's last day") {
  // Token 0 sells at 5 ETH on day 100, token 1 at 3 ETH on day 95.
  std::vector<SaleEvent> events{sale(0, 100, "5"), sale(1, 95, "3")};
  sort_and_sequence(events);
  auto cs = build_series("c", events, kInception, {0, 1});

  auto q2 = quarter_stats(cs, events, QuarterId::q2, Wei(0));
  CHECK(q2.market_cap_wei == parse_eth("8"));
  CHECK(q2.market_cap == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(q2.high == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(q2.low == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(q2.mean == doctest::Approx(4.0).epsilon(1e-12));
  REQUIRE(q2.change_pct.has_value());

  // Q1 has no sales and a zero cap.
  auto q1 = quarter_stats(cs, events, QuarterId::q1);
  CHECK(q1.market_cap_wei == Wei(0));
  CHECK(!q1.change_pct.has_value());

  // Q3 carries the caps forward with no in-quarter sales.
  auto q3 = quarter_stats(cs, events, QuarterId::q3, q2.market_cap_wei);
  CHECK(q3.market_cap_wei == parse_eth("8"));
  REQUIRE(q3.change_pct.has_value());
  CHECK(*q3.change_pct == doctest::Approx(0.0).epsilon(1e-12));

  // change_pct against the given previous cap.
  auto q2b = quarter_stats(cs, events, QuarterId::q2, parse_eth("4"));
  REQUIRE(q2b.change_pct.has_value());
  CHECK(*q2b.change_pct == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("quarter_stats derives sale prices from plateau starts when no events given") {
  auto cs = testutil::make_collection(
      "c", 365, {{{95, 3.0, 1}, {120, 7.0, 2}}, {{150, 2.0, 1}}});
  auto q2 = quarter_stats(cs, {}, QuarterId::q2);
  // Plateau starts inside Q2: 3, 7, and 2.
  CHECK(q2.high == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(q2.low == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(q2.mean == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q2.market_cap == doctest::Approx(9.0).epsilon(1e-12));

  // A quarter with no plateau starts keeps zero trade stats but carries cap.
  auto q3 = quarter_stats(cs, {}, QuarterId::q3);
  CHECK(q3.market_cap == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(q3.high == 0.0);
  CHECK(q3.mean == 0.0);
}

TEST_CASE("regression over quarters flattens per-token daily values") {
  auto actual = testutil::make_collection("c", 365, {{{0, 2.0, 1}}});
  auto projected = testutil::make_collection("c", 365, {{{0, 3.0, 1}}});
  auto stats = regression_stats(actual, projected, {QuarterId::q2, QuarterId::q3, QuarterId::q4});
  // Every compared day differs by exactly 1 ETH.
  CHECK(stats.mae == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.mse == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.rmse == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.r2_degenerate);

  auto sloped_a = testutil::make_collection(
      "c", 365, {{{0, 1.0, 1}, {100, 2.0, 2}, {200, 3.0, 3}}});
  auto stats_q2 = regression_stats(sloped_a, sloped_a, {QuarterId::q2});
  CHECK(stats_q2.mae == 0.0);
  CHECK(stats_q2.r2 == doctest::Approx(1.0).epsilon(1e-12));

  auto mismatched = testutil::make_collection("c", 365, {{{0, 2.0, 1}}, {{0, 1.0, 1}}});
  CHECK_THROWS_AS(regression_stats(actual, mismatched, {QuarterId::q2}), Error);
}
