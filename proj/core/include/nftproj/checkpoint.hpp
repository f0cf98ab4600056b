#pragma once

#include <optional>
#include <string>

#include "nftproj/context.hpp"
#include "nftproj/lstm.hpp"
#include "nftproj/train.hpp"

namespace nftproj {

/// Everything a downstream run needs to generate and evaluate: the fitted
/// PCA + normalization, the training context table, the trained model, and
/// the exact training configuration. Any part may be absent (e.g. a
/// `context fit` checkpoint carries no model yet).
struct Checkpoint {
  std::optional<PcaModel> pca;
  std::optional<NormalizationParams> norm;
  ContextTable contexts;
  std::optional<ModelParams> model;
  std::optional<TrainConfig> config;
};

/// Single binary container: magic "NFTP", format version u32, five
/// length-prefixed sections (pca, norm, contexts, model, config), trailing
/// FNV-1a 64 checksum. Little-endian throughout; floats round-trip
/// bit-exactly. Empty sections encode absent parts.
void save_checkpoint(const Checkpoint& cp, const std::string& path);

/// Throws CorruptCheckpoint on bad magic, unsupported version, checksum
/// mismatch, truncation, or malformed sections; IoError when unreadable.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nftproj
