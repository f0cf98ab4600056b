#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nftproj/ingest.hpp"
#include "nftproj/series.hpp"

namespace nftproj {

/// Parameters of one synthetic collection. Sale days are uniform over the
/// 365-day year; each sale's price is initial_price × quarterly_drift^q ×
/// exp(volatility·z) with q the sale day's quarter index and z standard
/// normal. Multipliers are quantized to the micro grid so that scaling
/// initial_price_eth scales every event price exactly.
struct SynthSpec {
  std::uint32_t n_tokens = 0;
  double active_fraction = 1.0;             // share of tokens with ≥ 1 sale
  std::map<std::uint32_t, double> count_distribution;  // per-token first-year sale counts
  std::string initial_price_eth = "1";      // positive decimal, ≤ 12 fractional digits
  double quarterly_drift = 1.0;             // > 0
  double volatility = 0.0;                  // lognormal sigma per sale, ≥ 0
  std::uint64_t seed = 0;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Checks SynthSpec invariants (probabilities sum to 1 ± 1e-9, positive
/// price on the micro grid, positive drift, non-negative volatility).
/// Throws InvalidSpec.
void validate_spec(const SynthSpec& spec);

struct SynthCorpus {
  std::string collection_id;
  std::string role;  // "train", "test", or "ood" within a benchmark suite
  SynthSpec spec;
  std::vector<SaleEvent> events;            // sorted and sequenced
  CollectionSeries truth;                   // = build_series(events)
  std::vector<std::uint32_t> drawn_counts;  // ground-truth per-token sale counts
};

/// Fixed inception of every synthetic collection (2021-01-01 00:00 UTC).
inline constexpr std::int64_t kSynthInceptionTs = 1609459200;

/// Deterministic generation: token t draws from its own stream derived
/// from (spec.seed, t), in the order active → count → per-sale days →
/// per-sale price multipliers.
SynthCorpus generate_collection(const SynthSpec& spec, const std::string& collection_id);

struct BenchmarkSuite {
  std::uint64_t seed = 0;
  std::vector<SynthCorpus> corpora;  // 5 train, 4 test, 1 ood, in that order
  /// Target tiers of the five training corpora, recorded in the manifest.
  std::vector<int> tier_pattern{1, 2, 3, 3, 3};
};

/// The desk-scale benchmark: five training collections spanning the cap
/// tiers, four test collections that are near-twins of training specs, and
/// one deliberately out-of-distribution collection. Per-collection seeds
/// derive from the suite seed by corpus index.
BenchmarkSuite make_benchmark_suite(std::uint64_t seed);

/// JSON manifest of ids, roles, seeds, and full specs; stable key order,
/// suitable for byte-comparison fixtures.
void write_suite_manifest(const BenchmarkSuite& suite, std::ostream& out);
void write_suite_manifest(const BenchmarkSuite& suite, const std::string& path);

}  // namespace nftproj
