#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nftproj/ingest.hpp"
#include "nftproj/series.hpp"

namespace nftproj {

/// Market statistics of one quarter. market_cap is the sum of carried
/// values at the quarter's final day (exact wei, mirrored in ETH);
/// high/low/mean are over sale prices occurring within the quarter.
struct QuarterStats {
  Wei market_cap_wei = 0;
  double market_cap = 0.0;  // ETH
  double high = 0.0;
  double low = 0.0;
  double mean = 0.0;
  std::optional<double> change_pct;  // vs the previous quarter's cap
};

/// Computes quarter statistics. For observed collections pass the sale
/// events (high/low/mean over in-quarter sale prices, bucketed by the
/// series' inception timestamp). For generated series pass an empty event
/// list: sale prices are then derived from plateau starts (days whose
/// count exceeds the previous day's). change_pct is filled when a nonzero
/// prev_cap is given; a zero previous cap leaves it empty.
QuarterStats quarter_stats(const CollectionSeries& cs, const std::vector<SaleEvent>& events,
                           QuarterId q, std::optional<Wei> prev_cap = std::nullopt);

/// Percent change between consecutive quarterly caps (ETH).
double change_pct(double prev_cap, double cap);

enum class Tier { tier1 = 1, tier2 = 2, tier3 = 3 };

/// Market-cap tiers: > 15 000 ETH → Tier 1, > 2 000 → Tier 2, else Tier 3.
/// Boundary caps land in the lower tier (15 000 → Tier 2, 2 000 → Tier 3).
Tier tier(double market_cap_eth);

struct RegressionStats {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  /// Set when all actual values are equal, leaving r2 undefined (reported
  /// as NaN).
  bool r2_degenerate = false;
};

/// Core regression statistics over two flattened value arrays.
RegressionStats regression_stats(std::span<const double> actual,
                                 std::span<const double> predicted);

/// Flattens daily values (ETH) of the selected quarters over all tokens of
/// both series, then compares. Token sets and frames must match.
RegressionStats regression_stats(const CollectionSeries& actual,
                                 const CollectionSeries& projected,
                                 const std::vector<QuarterId>& quarters);

/// |y − ŷ| / y. Throws ZeroActual when y = 0.
double abs_diff_pct(double y, double y_hat);

}  // namespace nftproj
