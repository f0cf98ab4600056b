#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nftproj/ingest.hpp"
#include "nftproj/wei.hpp"

namespace nftproj {

inline constexpr std::uint32_t kYearDays = 365;
inline constexpr std::uint32_t kQ1Days = 91;
inline constexpr std::size_t kSeriesFeatures = 2;  // (value, count) per day

/// One day of a token's transaction series: the last transacted price
/// carried forward, and the cumulative sale count since inception.
/// count = 0 implies value = 0.
struct DailyPoint {
  Wei value = 0;
  std::uint32_t count = 0;

  friend bool operator==(const DailyPoint&, const DailyPoint&) = default;
};

/// Daily series for one token. For a full-frame series start_day = 0 and
/// points.size() = 365; quarter slices keep their original day offset in
/// start_day.
struct TokenSeries {
  std::uint64_t token_id = 0;
  std::uint32_t start_day = 0;
  std::vector<DailyPoint> points;

  friend bool operator==(const TokenSeries&, const TokenSeries&) = default;
};

struct CollectionSeries {
  std::string collection_id;
  std::int64_t inception_ts = 0;  // unix seconds of day 0
  std::vector<TokenSeries> tokens;

  std::int64_t inception_day() const { return inception_ts / 86400; }

  friend bool operator==(const CollectionSeries&, const CollectionSeries&) = default;
};

enum class QuarterId { q1, q2, q3, q4 };

struct DayRange {
  std::uint32_t first = 0;
  std::uint32_t length = 0;
};

/// Quarter day ranges partitioning the 365-day year: 91/91/91/92.
DayRange quarter_range(QuarterId q) noexcept;

const char* quarter_name(QuarterId q) noexcept;

/// Builds per-token daily series from sale events. Day buckets are
/// floor((timestamp − inception_ts)/86400); events past day 364 are dropped
/// (count reported through dropped_after_window), events before inception
/// raise ParseError, events whose token is not listed raise UnknownToken.
/// Within a day the chronologically last sale (timestamp, then seq) sets
/// the carried value. Tokens without events get all-zero series.
CollectionSeries build_series(const std::string& collection_id,
                              std::vector<SaleEvent> events,
                              std::int64_t inception_ts,
                              const std::vector<std::uint64_t>& token_ids,
                              std::size_t* dropped_after_window = nullptr);

/// Restriction of every token to the quarter's day range; original day
/// indices preserved via TokenSeries::start_day.
CollectionSeries slice_quarter(const CollectionSeries& cs, QuarterId q);

/// Histogram of cumulative counts at day horizon_days−1 over all tokens.
std::map<std::uint32_t, std::size_t> tx_count_histogram(const CollectionSeries& cs,
                                                        std::uint32_t horizon_days);

/// Checks TokenSeries invariants (monotone counts, value changes only with
/// count increases, count 0 ⟹ value 0) on every token; full_frame
/// additionally requires start_day 0 and 365 points. Throws on violation.
void validate_series(const CollectionSeries& cs, bool full_frame);

/// CSV interchange: columns `token_id,day,value_eth,count`, one row per
/// token-day, days ascending within a token. value_eth is the exact
/// decimal wei rendering.
void write_series_csv(const CollectionSeries& cs, std::ostream& out);
void write_series_csv(const CollectionSeries& cs, const std::string& path);
CollectionSeries read_series_csv(std::istream& in, const std::string& origin,
                                 const std::string& collection_id,
                                 std::int64_t inception_ts);
CollectionSeries read_series_csv(const std::string& path, const std::string& collection_id,
                                 std::int64_t inception_ts);

}  // namespace nftproj
