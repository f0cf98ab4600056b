#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nftproj/lstm.hpp"
#include "nftproj/series.hpp"

namespace nftproj {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 1024;
  std::size_t window = 20;
  std::size_t hidden = kDefaultHidden;
  double dropout_rate = kDefaultDropout;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  /// Day stride when enumerating windows (1 = every day, the paper-scale
  /// setting; larger strides subsample for desk-scale runs).
  std::size_t window_stride = 1;
  /// Worker threads for in-batch gradient accumulation. Results are
  /// independent of this value: examples are summed in fixed chunk order.
  std::size_t threads = 1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// A series paired with the conditioning context it should be trained
/// under (the real context for the contextual model, all-zeros for
/// unconditional baselines).
struct ConditionedSeries {
  ContextVector context;
  const CollectionSeries* series = nullptr;
};

/// Sliding-window training examples stored as views into per-token feature
/// rows: entry e holds a token's full (value, count) day-major float row,
/// and each example references (entry, target day). The window is the
/// `window` days before the target day.
struct TrainingSet {
  struct Entry {
    ContextVector context;
    std::vector<double> feats;  // days × kSeriesFeatures
  };
  struct ExampleRef {
    std::uint32_t entry = 0;
    std::uint32_t target_day = 0;
  };

  std::size_t window = 0;
  std::vector<Entry> entries;
  std::vector<ExampleRef> examples;

  std::span<const double> window_of(const ExampleRef& ex) const {
    const Entry& e = entries[ex.entry];
    return {e.feats.data() + (ex.target_day - window) * kSeriesFeatures,
            window * kSeriesFeatures};
  }
  std::span<const double> target_of(const ExampleRef& ex) const {
    const Entry& e = entries[ex.entry];
    return {e.feats.data() + ex.target_day * kSeriesFeatures, kSeriesFeatures};
  }
};

/// One example per (token, target day) with target days window, window +
/// stride, … ≤ last day. Values enter as raw ETH floats, counts as raw
/// cumulative counts. Throws SeriesTooShort when a token has fewer than
/// window + 1 days.
TrainingSet make_training_set(std::span<const ConditionedSeries> collections,
                              std::size_t window = 20, std::size_t stride = 1);

/// Mean-squared-error loss over the batch: L = Σ‖y−t‖² / (2·batch), i.e.
/// the mean over batch elements and the 2 output features of squared
/// error, halved. Gradients (exact BPTT) are accumulated into `grads`,
/// which the caller must pass zeroed. Per-example dropout noise derives
/// from dropout_seed and the example's position, so any chunked execution
/// reproduces the same masks. Throws NonFinite on divergence.
double loss_and_grad(const ModelParams& model, const TrainingSet& data,
                     std::span<const std::uint32_t> batch, std::uint64_t dropout_seed,
                     ModelParams& grads, std::size_t threads = 1);

/// Convenience overload drawing the dropout seed from rng.
double loss_and_grad(const ModelParams& model, const TrainingSet& data,
                     std::span<const std::uint32_t> batch, Rng& rng, ModelParams& grads);

struct AdamState {
  ModelParams m;
  ModelParams v;

  static AdamState init(const ModelParams& model) {
    return {ModelParams::zeros_like(model), ModelParams::zeros_like(model)};
  }
};

/// Bias-corrected Adam update, applied per scalar parameter. step_index
/// counts from 1 for the first step.
void adam_step(ModelParams& model, const ModelParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps, std::uint64_t step_index);

struct TrainResult {
  ModelParams model;
  std::vector<double> loss_history;  // epoch-mean loss
};

/// Mini-batch training: seeded shuffle each epoch, batches of
/// config.batch_size (final partial batch kept), dropout active, Adam
/// updates. Deterministic given config.seed, for any thread count.
TrainResult train(const TrainConfig& config, const TrainingSet& data);

}  // namespace nftproj
