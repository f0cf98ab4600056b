#include "nftproj/transform.hpp"

#include <cmath>
#include <cstdint>

#include "nftproj/errors.hpp"

namespace nftproj {

std::vector<DailyPoint> step_transform(const Tensor& raw, DailyPoint last_observed,
                                       StepDiagnostics* diag) {
  if (raw.shape().size() != 2 || raw.shape()[1] != kSeriesFeatures) {
    raise(Errc::shape_mismatch, "raw generation must be a [horizon × 2] tensor");
  }
  const std::size_t horizon = raw.shape()[0];
  std::vector<DailyPoint> out;
  out.reserve(horizon);

  std::uint32_t count = last_observed.count;
  Wei value = last_observed.value;

  for (std::size_t d = 0; d < horizon; ++d) {
    double value_f = raw.at(d, 0);
    double count_f = raw.at(d, 1);
    if (!std::isfinite(value_f) || !std::isfinite(count_f)) {
      raise(Errc::non_finite, "raw generation has a non-finite entry at day " +
                                  std::to_string(d));
    }

    // Round half away from zero, clamp into the representable count range.
    double rounded = count_f >= 0.0 ? std::floor(count_f + 0.5) : std::ceil(count_f - 0.5);
    double clamped = std::min(std::max(rounded, 0.0), double(UINT32_MAX));
    auto day_count = std::uint32_t(clamped);

    if (day_count > count) {
      count = day_count;
      if (value_f < 0.0 && diag) ++diag->negative_values_clamped;
      value = wei_from_eth_micro(value_f);  // maps negatives to 0
    }
    out.push_back(DailyPoint{value, count});
  }
  return out;
}

CollectionSeries assemble_projection(const CollectionSeries& q1,
                                     const std::vector<std::vector<DailyPoint>>& generated) {
  if (generated.size() != q1.tokens.size()) {
    raise(Errc::token_set_mismatch,
          "generated series count " + std::to_string(generated.size()) +
              " does not match token count " + std::to_string(q1.tokens.size()));
  }
  CollectionSeries out;
  out.collection_id = q1.collection_id;
  out.inception_ts = q1.inception_ts;
  out.tokens.reserve(q1.tokens.size());

  const std::size_t tail = kYearDays - kQ1Days;  // 274
  for (std::size_t i = 0; i < q1.tokens.size(); ++i) {
    const TokenSeries& ts = q1.tokens[i];
    if (ts.start_day != 0 || ts.points.size() != kQ1Days) {
      raise(Errc::length_mismatch,
            "token " + std::to_string(ts.token_id) + ": expected a 91-day first quarter");
    }
    if (generated[i].size() != tail) {
      raise(Errc::length_mismatch,
            "token " + std::to_string(ts.token_id) + ": generated continuation has " +
                std::to_string(generated[i].size()) + " days; need " + std::to_string(tail));
    }
    TokenSeries full;
    full.token_id = ts.token_id;
    full.start_day = 0;
    full.points = ts.points;
    full.points.insert(full.points.end(), generated[i].begin(), generated[i].end());
    out.tokens.push_back(std::move(full));
  }
  validate_series(out, true);
  return out;
}

}  // namespace nftproj
