#include "nftproj/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nftproj/errors.hpp"

namespace nftproj {

QuarterStats quarter_stats(const CollectionSeries& cs, const std::vector<SaleEvent>& events,
                           QuarterId q, std::optional<Wei> prev_cap) {
  DayRange r = quarter_range(q);
  QuarterStats stats;

  for (const TokenSeries& ts : cs.tokens) {
    if (ts.start_day != 0 || ts.points.size() != kYearDays) {
      raise(Errc::shape_mismatch, "quarter_stats requires full 365-day frames");
    }
    stats.market_cap_wei += ts.points[r.first + r.length - 1].value;
  }
  stats.market_cap = to_eth(stats.market_cap_wei);

  // In-quarter sale prices: from events when given, otherwise from the
  // series' plateau starts.
  Wei sum = 0;
  std::size_t n = 0;
  Wei high = 0;
  Wei low = 0;
  auto add_price = [&](Wei price) {
    if (n == 0) {
      high = low = price;
    } else {
      high = std::max(high, price);
      low = std::min(low, price);
    }
    sum += price;
    ++n;
  };

  if (!events.empty()) {
    for (const SaleEvent& ev : events) {
      if (ev.timestamp < cs.inception_ts) continue;
      std::int64_t day = (ev.timestamp - cs.inception_ts) / 86400;
      if (day >= std::int64_t(r.first) && day < std::int64_t(r.first + r.length)) {
        add_price(ev.price_wei);
      }
    }
  } else {
    for (const TokenSeries& ts : cs.tokens) {
      for (std::uint32_t d = r.first; d < r.first + r.length; ++d) {
        std::uint32_t prev = d == 0 ? 0 : ts.points[d - 1].count;
        if (ts.points[d].count > prev) add_price(ts.points[d].value);
      }
    }
  }
  if (n > 0) {
    stats.high = to_eth(high);
    stats.low = to_eth(low);
    stats.mean = to_eth(sum) / double(n);
  }

  if (prev_cap && *prev_cap != Wei(0)) {
    stats.change_pct = change_pct(to_eth(*prev_cap), stats.market_cap);
  }
  return stats;
}

double change_pct(double prev_cap, double cap) {
  if (prev_cap == 0.0) {
    raise(Errc::zero_actual, "change_pct undefined for a zero previous cap");
  }
  return (cap - prev_cap) / prev_cap * 100.0;
}

Tier tier(double market_cap_eth) {
  if (market_cap_eth < 0.0) raise(Errc::invalid_spec, "market cap must be non-negative");
  if (market_cap_eth > 15000.0) return Tier::tier1;
  if (market_cap_eth > 2000.0) return Tier::tier2;
  return Tier::tier3;
}

RegressionStats regression_stats(std::span<const double> actual,
                                 std::span<const double> predicted) {
  if (actual.size() != predicted.size() || actual.empty()) {
    raise(Errc::length_mismatch, "regression inputs must be equal-length and non-empty");
  }
  const double n = double(actual.size());
  double abs_sum = 0.0, sq_sum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double d = actual[i] - predicted[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    mean += actual[i];
  }
  mean /= n;

  double var_sum = 0.0;
  for (double y : actual) {
    double d = y - mean;
    var_sum += d * d;
  }

  RegressionStats s;
  s.mae = abs_sum / n;
  s.mse = sq_sum / n;
  s.rmse = std::sqrt(s.mse);
  if (var_sum == 0.0) {
    s.r2 = std::numeric_limits<double>::quiet_NaN();
    s.r2_degenerate = true;
  } else {
    s.r2 = 1.0 - sq_sum / var_sum;
  }
  return s;
}

RegressionStats regression_stats(const CollectionSeries& actual,
                                 const CollectionSeries& projected,
                                 const std::vector<QuarterId>& quarters) {
  if (actual.tokens.size() != projected.tokens.size()) {
    raise(Errc::token_set_mismatch, "token sets differ in size");
  }
  std::vector<double> y, y_hat;
  for (std::size_t i = 0; i < actual.tokens.size(); ++i) {
    const TokenSeries& a = actual.tokens[i];
    const TokenSeries& p = projected.tokens[i];
    if (a.token_id != p.token_id) {
      raise(Errc::token_set_mismatch, "token order differs between series");
    }
    if (a.start_day != 0 || a.points.size() != kYearDays || p.start_day != 0 ||
        p.points.size() != kYearDays) {
      raise(Errc::shape_mismatch, "regression_stats requires full 365-day frames");
    }
    for (QuarterId q : quarters) {
      DayRange r = quarter_range(q);
      for (std::uint32_t d = r.first; d < r.first + r.length; ++d) {
        y.push_back(to_eth(a.points[d].value));
        y_hat.push_back(to_eth(p.points[d].value));
      }
    }
  }
  return regression_stats(y, y_hat);
}

double abs_diff_pct(double y, double y_hat) {
  if (y == 0.0) raise(Errc::zero_actual, "absolute-difference ratio undefined for y = 0");
  return std::abs(y - y_hat) / y;
}

}  // namespace nftproj
