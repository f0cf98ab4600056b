#pragma once

#include <cstddef>
#include <vector>

#include "nftproj/series.hpp"
#include "nftproj/tensor.hpp"

namespace nftproj {

struct StepDiagnostics {
  std::size_t negative_values_clamped = 0;
};

/// Converts a raw generated [horizon × 2] (value_f, count_f) matrix into a
/// valid piecewise-constant daily series continuing from last_observed:
/// counts are the running maximum of round-half-away-from-zero(count_f),
/// clamped below by last_observed.count; each day the count strictly
/// increases starts a new value plateau at that day's value_f (clamped to
/// ≥ 0, quantized to the micro-ETH grid); other days carry the previous
/// plateau value. Idempotent: re-transforming the output (read back as raw
/// floats) reproduces it exactly. Throws NonFinite on non-finite input.
std::vector<DailyPoint> step_transform(const Tensor& raw, DailyPoint last_observed,
                                       StepDiagnostics* diag = nullptr);

/// Joins an observed Q1 (91 days from day 0) with per-token generated
/// continuations (274 days each, token order matching q1.tokens) into a
/// full 365-day frame. Throws LengthMismatch / TokenSetMismatch.
CollectionSeries assemble_projection(const CollectionSeries& q1,
                                     const std::vector<std::vector<DailyPoint>>& generated);

}  // namespace nftproj
