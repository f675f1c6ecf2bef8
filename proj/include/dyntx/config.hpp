#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <torch/types.h>

#include "json.hpp"

namespace dyntx {

/// How the source video is turned into per-frame dynamics codes.
enum class EncodingVariant {
  Raw,          // frame features as-is
  PixelDiff,    // features of the frame minus the reference frame
  FeatureDiff,  // features minus the reference frame's features (appearance suppressed)
};

std::string_view to_string(EncodingVariant v);
/// Accepts the CLI spellings `raw`, `pixel-diff`, `feature-diff` and the
/// enum spellings `RAW`, `PIXEL_DIFF`, `FEATURE_DIFF`.
EncodingVariant parse_encoding(std::string_view s);

enum class GanLoss { NonSaturating, LeastSquares, Hinge };

std::string_view to_string(GanLoss l);
GanLoss parse_gan_loss(std::string_view s);

/// Architecture of every network. Spatial size must be divisible by
/// 2^levels() where levels() = widths.size().
struct ModelConfig {
  int channels = 1;
  int height = 32;
  int width = 32;
  int stem_channels = 16;
  std::vector<int> widths{16, 32, 64};
  int dyn_channels = 64;
  int hidden_channels = 64;
  /// Seeded noise map concatenated to each dynamics code; 0 disables it.
  int noise_channels = 0;
  /// PIXEL_DIFF against the previous frame instead of the reference frame.
  bool consecutive_pixel_diff = false;
  std::vector<int> disc_widths{16, 32, 64};
  int temporal_kernel = 3;

  int levels() const { return static_cast<int>(widths.size()); }
  int bottleneck_height() const { return height >> levels(); }
  int bottleneck_width() const { return width >> levels(); }
  /// Throws ConfigError when the configuration cannot be built.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct TrainingConfig {
  ModelConfig model;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_adv_spatial = 1.0;
  double weight_adv_temporal = 1.0;
  double weight_recon = 10.0;
  GanLoss gan_loss = GanLoss::NonSaturating;
  int batch_size = 4;
  double self_fraction = 0.5;
  std::int64_t total_steps = 20000;
  EncodingVariant encoding = EncodingVariant::FeatureDiff;
  int ref_index = 0;
  std::int64_t seed = 0;
  std::int64_t checkpoint_every = 1000;
  /// "float32" or "float64"; parameters and optimizer state use this type.
  std::string dtype = "float32";
  /// Learning-rate halving on plateau of the windowed generator loss.
  /// 0 disables the schedule.
  int plateau_patience = 0;
  int plateau_window = 50;
  double plateau_factor = 0.5;

  torch::Dtype scalar_type() const;
  void validate() const;

  bool operator==(const TrainingConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);

/// Parses and validates a training config; missing keys take defaults,
/// unknown keys are rejected.
TrainingConfig training_config_from_json(const nlohmann::json& j);
TrainingConfig load_training_config(const std::string& path);

}  // namespace dyntx
