#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nftproj/linalg.hpp"
#include "nftproj/series.hpp"

namespace nftproj {

inline constexpr std::size_t kContextDim = 6;
inline constexpr std::size_t kTokenVectorDim = std::size_t(kQ1Days) * 2;  // 182

/// PCA over first-quarter token vectors: 91 days × (value, count),
/// flattened day-major.
struct PcaModel {
  std::vector<double> mean;                        // kTokenVectorDim
  Mat components;                                  // kContextDim × kTokenVectorDim, rows orthonormal
  std::array<double, kContextDim> explained_variance{};  // descending

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// 6-D collection embedding. Table entries produced by normalization lie
/// in [1,3]; the zero vector doubles as the "unconditioned" placeholder
/// fed to baseline models.
struct ContextVector {
  std::array<double, kContextDim> values{};

  friend bool operator==(const ContextVector&, const ContextVector&) = default;
};

/// Frozen parameters of the min-max normalization: the offset |minimum|
/// added to every raw component, then one global min-max over the offset
/// training array mapped onto [a, b] = [1, 3].
struct NormalizationParams {
  double abs_min_offset = 0.0;
  double global_min = 0.0;
  double global_max = 0.0;
  double a = 1.0;
  double b = 3.0;

  friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

using RawContextTable = std::map<std::string, std::array<double, kContextDim>>;
using ContextTable = std::map<std::string, ContextVector>;

/// Flattens a token's Q1 series into the 182-vector (value ETH, count) per
/// day. The series must cover at least the 91 Q1 days from day 0.
std::array<double, kTokenVectorDim> token_vector(const TokenSeries& ts);

/// Fits PCA on all token vectors pooled across the given Q1 series:
/// global-mean centering, sample covariance, top-6 eigenvectors. Sign
/// convention: each component's largest-magnitude loading is positive
/// (first index wins ties). Throws RankDeficient when the covariance has
/// rank < 6.
PcaModel fit_pca(const std::vector<CollectionSeries>& training_q1);

/// Mean over the collection's tokens of centered-and-projected 6-vectors.
std::array<double, kContextDim> collection_context_raw(const PcaModel& pca,
                                                       const CollectionSeries& q1);

double apply_normalization(const NormalizationParams& params, double raw) noexcept;

/// Concatenates every raw component into one array, offsets by |min|, and
/// min-max scales onto [1,3] with the single global min and max. Throws
/// DegenerateRange when all raw values are equal.
std::pair<ContextTable, NormalizationParams> normalize_contexts(const RawContextTable& raw);

/// Projects a new collection with the frozen PCA and normalization, then
/// clamps each component into [1,3].
ContextVector embed_new(const PcaModel& pca, const NormalizationParams& params,
                        const CollectionSeries& q1);

struct DistanceResult {
  double min_distance = 0.0;
  std::string nearest;
};

/// Nearest training context by Euclidean distance in 6-D.
DistanceResult context_distance(const ContextVector& ctx, const ContextTable& table);

double euclidean_distance(const ContextVector& x, const ContextVector& y) noexcept;

/// Largest pairwise distance within a table; the default warning threshold
/// for out-of-distribution diagnostics.
double max_pairwise_distance(const ContextTable& table);

/// CSV interchange: `collection_id,c1,c2,c3,c4,c5,c6` with shortest
/// round-trip float formatting.
void write_context_csv(const ContextTable& table, std::ostream& out);
void write_context_csv(const ContextTable& table, const std::string& path);
ContextTable read_context_csv(std::istream& in, const std::string& origin);
ContextTable read_context_csv(const std::string& path);

}  // namespace nftproj
