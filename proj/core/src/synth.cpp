#include "nftproj/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nftproj/errors.hpp"
#include "nftproj/rng.hpp"
#include "nftproj/wei.hpp"

namespace nftproj {

namespace {

constexpr std::int64_t kSaleSecondOfDay = 43200;  // noon, clear of day edges

std::uint32_t draw_count(const std::map<std::uint32_t, double>& dist, Rng& rng) {
  double u = rng.uniform();
  double cum = 0.0;
  std::uint32_t last = 0;
  for (const auto& [count, prob] : dist) {
    cum += prob;
    last = count;
    if (u < cum) return count;
  }
  return last;  // u fell into the ±1e-9 slack past the final bucket
}

}  // namespace

void validate_spec(const SynthSpec& spec) {
  if (spec.n_tokens == 0) raise(Errc::invalid_spec, "n_tokens must be positive");
  if (!(spec.active_fraction >= 0.0 && spec.active_fraction <= 1.0)) {
    raise(Errc::invalid_spec, "active_fraction must lie in [0, 1]");
  }
  if (spec.count_distribution.empty()) {
    raise(Errc::invalid_spec, "count_distribution must be non-empty");
  }
  double sum = 0.0;
  for (const auto& [count, prob] : spec.count_distribution) {
    if (count == 0) raise(Errc::invalid_spec, "count_distribution buckets must be >= 1");
    if (!(prob >= 0.0)) raise(Errc::invalid_spec, "count_distribution probabilities must be >= 0");
    sum += prob;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    raise(Errc::invalid_spec, "count_distribution probabilities must sum to 1");
  }
  Wei initial = parse_eth(spec.initial_price_eth);
  if (initial == 0) raise(Errc::invalid_spec, "initial_price_eth must be positive");
  if (initial % kMicroPerEth != 0) {
    raise(Errc::invalid_spec,
          "initial_price_eth must have at most 12 fractional digits (micro grid)");
  }
  if (!(spec.quarterly_drift > 0.0) || !std::isfinite(spec.quarterly_drift)) {
    raise(Errc::invalid_spec, "quarterly_drift must be positive and finite");
  }
  if (!(spec.volatility >= 0.0) || !std::isfinite(spec.volatility)) {
    raise(Errc::invalid_spec, "volatility must be non-negative and finite");
  }
}

SynthCorpus generate_collection(const SynthSpec& spec, const std::string& collection_id) {
  validate_spec(spec);
  SynthCorpus corpus;
  corpus.collection_id = collection_id;
  corpus.spec = spec;
  corpus.drawn_counts.assign(spec.n_tokens, 0);

  const Wei initial_grid_units = parse_eth(spec.initial_price_eth) / kMicroPerEth;

  std::vector<std::uint64_t> token_ids(spec.n_tokens);
  for (std::uint32_t t = 0; t < spec.n_tokens; ++t) {
    token_ids[t] = t;
    Rng rng(derive_seed(spec.seed, t));
    if (spec.active_fraction <= 0.0 || rng.uniform() >= spec.active_fraction) continue;
    std::uint32_t count = draw_count(spec.count_distribution, rng);
    corpus.drawn_counts[t] = count;

    struct Sale {
      std::uint32_t day;
      double z;
    };
    std::vector<Sale> sales(count);
    for (auto& s : sales) s.day = std::uint32_t(rng.uniform_int(kYearDays));
    for (auto& s : sales) s.z = rng.normal();
    std::stable_sort(sales.begin(), sales.end(),
                     [](const Sale& a, const Sale& b) { return a.day < b.day; });

    for (const Sale& s : sales) {
      int quarter = s.day < 91 ? 0 : s.day < 182 ? 1 : s.day < 273 ? 2 : 3;
      double mult = std::pow(spec.quarterly_drift, quarter) * std::exp(spec.volatility * s.z);
      // Micro-grid quantization keeps prices exact multiples of the
      // initial price, so scaling the initial price scales every event.
      auto mult_micro = std::uint64_t(std::max(1.0, mult * double(kMicroPerEth) + 0.5));
      SaleEvent ev;
      ev.collection_id = collection_id;
      ev.token_id = t;
      ev.timestamp = kSynthInceptionTs + std::int64_t(s.day) * 86400 + kSaleSecondOfDay;
      ev.price_wei = initial_grid_units * Wei(mult_micro);
      corpus.events.push_back(std::move(ev));
    }
  }

  sort_and_sequence(corpus.events);
  corpus.truth = build_series(collection_id, corpus.events, kSynthInceptionTs, token_ids);
  return corpus;
}

BenchmarkSuite make_benchmark_suite(std::uint64_t seed) {
  struct Blueprint {
    const char* id;
    const char* role;
    SynthSpec spec;
  };

  // Five training collections form a price ladder whose quarterly drift
  // rises with scale; bands overlap across quarters, so recent values alone
  // do not identify a collection but its context vector does. Four test
  // collections are near-twins of training specs, and one deliberately
  // out-of-distribution collection sits outside every training range in
  // scale, drift, volatility, and trading intensity.
  std::vector<Blueprint> blueprints{
      {"alpha", "train",
       {80, 0.95, {{1, 0.20}, {2, 0.45}, {3, 0.25}, {4, 0.10}}, "80", 1.9, 0.25, 0}},
      {"beta", "train",
       {70, 0.90, {{1, 0.30}, {2, 0.50}, {3, 0.20}}, "40", 1.6, 0.30, 0}},
      {"gamma", "train",
       {55, 0.80, {{1, 0.40}, {2, 0.40}, {3, 0.20}}, "16", 1.45, 0.30, 0}},
      {"delta", "train",
       {50, 0.70, {{1, 0.50}, {2, 0.35}, {3, 0.15}}, "6", 1.25, 0.35, 0}},
      {"epsilon", "train",
       {48, 0.75, {{1, 0.20}, {2, 0.50}, {3, 0.30}}, "7", 1.35, 0.30, 0}},
      {"zeta", "test",
       {52, 0.80, {{1, 0.40}, {2, 0.40}, {3, 0.20}}, "15", 1.4, 0.30, 0}},
      {"eta", "test",
       {46, 0.70, {{1, 0.50}, {2, 0.35}, {3, 0.15}}, "7", 1.25, 0.35, 0}},
      {"theta", "test",
       {64, 0.90, {{1, 0.30}, {2, 0.50}, {3, 0.20}}, "35", 1.55, 0.30, 0}},
      {"iota", "test",
       {72, 0.95, {{1, 0.20}, {2, 0.45}, {3, 0.25}, {4, 0.10}}, "75", 1.85, 0.25, 0}},
      {"kappa", "ood",
       {80, 1.0, {{6, 0.30}, {8, 0.30}, {10, 0.25}, {12, 0.15}}, "1200", 3.2, 1.20, 0}},
  };

  BenchmarkSuite suite;
  suite.seed = seed;
  suite.corpora.reserve(blueprints.size());
  for (std::size_t i = 0; i < blueprints.size(); ++i) {
    Blueprint& bp = blueprints[i];
    bp.spec.seed = derive_seed(seed, i);
    SynthCorpus corpus = generate_collection(bp.spec, bp.id);
    corpus.role = bp.role;
    suite.corpora.push_back(std::move(corpus));
  }
  return suite;
}

void write_suite_manifest(const BenchmarkSuite& suite, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["suite_seed"] = suite.seed;
  doc["tier_pattern"] = suite.tier_pattern;
  doc["inception_ts"] = kSynthInceptionTs;
  auto& list = doc["corpora"] = nlohmann::ordered_json::array();
  for (const SynthCorpus& c : suite.corpora) {
    nlohmann::ordered_json j;
    j["collection_id"] = c.collection_id;
    j["role"] = c.role;
    j["seed"] = c.spec.seed;
    j["n_tokens"] = c.spec.n_tokens;
    j["active_fraction"] = c.spec.active_fraction;
    auto& dist = j["count_distribution"] = nlohmann::ordered_json::object();
    for (const auto& [count, prob] : c.spec.count_distribution) {
      dist[std::to_string(count)] = prob;
    }
    j["initial_price_eth"] = c.spec.initial_price_eth;
    j["quarterly_drift"] = c.spec.quarterly_drift;
    j["volatility"] = c.spec.volatility;
    j["events"] = c.events.size();
    list.push_back(std::move(j));
  }
  out << doc.dump(2) << '\n';
}

void write_suite_manifest(const BenchmarkSuite& suite, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
  write_suite_manifest(suite, out);
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

}  // namespace nftproj
