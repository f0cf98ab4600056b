#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nftproj/context.hpp"
#include "nftproj/metrics.hpp"
#include "nftproj/train.hpp"

namespace nftproj {

struct EvalConfig {
  /// Template for every trained model; `seed` is the base from which each
  /// model derives its own stream.
  TrainConfig train;
  /// Context-distance warning threshold; negative selects the default,
  /// the largest pairwise distance among the training contexts.
  double distance_threshold = -1.0;
  /// Models trained concurrently. The report is identical for any value:
  /// each model owns a derived seed and rows assemble in label order.
  std::size_t parallel_models = 1;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct ReportRow {
  std::string collection_id;
  std::string model;
  RegressionStats stats;             // over Q2 to Q4 daily values
  std::array<double, 4> cap_diff{};  // |y−ŷ|/y of quarterly caps; [0] = 0
  Tier predicted_tier = Tier::tier3;
};

/// Per-test-collection context embedding, distance diagnostics, and the
/// observed market reference the rows are scored against.
struct CollectionDiagnostic {
  std::string collection_id;
  ContextVector context;
  double min_distance = 0.0;
  std::string nearest;
  bool warn = false;
  std::array<double, 4> actual_caps{};  // ETH
  Tier actual_tier = Tier::tier3;
};

struct EvalReport {
  std::vector<std::string> model_labels;  // M_1…M_m, M_X, ContextPred, NFT ContextPred
  std::vector<ReportRow> rows;            // per test collection, label order
  std::vector<CollectionDiagnostic> diagnostics;
  double distance_threshold = 0.0;
};

/// Baseline comparison harness. Trains one unconditional model per
/// training collection (M_1…M_m, context features zeroed), one aggregate
/// unconditional model over all of them (M_X), and one contextual model;
/// each test collection then gets m + 3 report rows: every baseline's raw
/// generations, the contextual model's raw generations (ContextPred), and
/// the contextual generations after the step-transform (NFT ContextPred).
/// Rows carry Q2 to Q4 regression statistics and per-quarter market-cap
/// absolute differences (Q1 is observed, so its difference is 0). When
/// context_model is given the contextual model is not retrained.
EvalReport run_evaluation(std::span<const ConditionedSeries> train_set,
                          std::span<const CollectionSeries> test_set, const PcaModel& pca,
                          const NormalizationParams& norm, const EvalConfig& config,
                          const ModelParams* context_model = nullptr);

/// `collection,model,mae,mse,rmse,r2,q1,q2,q3,q4,tier` with shortest
/// round-trip float formatting.
void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_csv(const EvalReport& report, const std::string& path);

/// `collection,min_distance,nearest,threshold,warn,actual_tier`.
void write_diagnostics_csv(const EvalReport& report, std::ostream& out);
void write_diagnostics_csv(const EvalReport& report, const std::string& path);

}  // namespace nftproj
