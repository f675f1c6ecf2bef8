#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"
#include "dyntx/metrics.hpp"
#include "dyntx/training.hpp"

namespace dyntx {

struct AblationRow {
  EncodingVariant variant = EncodingVariant::FeatureDiff;
  TransferMetrics metrics;  // held-out cross pairs; recon_psnr_db from self items
  std::size_t cross_pairs = 0;
  std::string corpus_hash;
  std::string heldout_hash;
  std::int64_t seed = 0;
  std::int64_t steps = 0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // RAW, PIXEL_DIFF, FEATURE_DIFF
};

struct AblationOptions {
  std::filesystem::path out_dir;  // one run directory per variant
  /// Continue from (or reuse) checkpoints already in the run directories.
  bool reuse = true;
  std::size_t max_pairs = 0;
  /// Training items used for the self-reconstruction PSNR column.
  std::size_t self_items = 16;
  std::function<void(EncodingVariant, const LossBundle&)> on_step;
};

/// Trains (or reloads) one model per encoding variant with otherwise
/// identical configs, then evaluates each on the same held-out set.
AblationReport run_ablation(std::span<const LabeledVideo> train_corpus, std::span<const LabeledVideo> heldout,
                            const TrainingConfig& base, const AblationOptions& options);

std::string ablation_csv(const AblationReport& report);
std::string ablation_markdown(const AblationReport& report);

}  // namespace dyntx
