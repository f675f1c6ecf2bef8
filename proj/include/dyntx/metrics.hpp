#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"
#include "dyntx/discriminators.hpp"
#include "dyntx/generator.hpp"

namespace dyntx {

struct TransferMetrics {
  double trajectory_rmse_px = 0;
  double appearance_mse = 0;
  std::optional<double> recon_psnr_db;  // self mode only
  double temporal_smoothness = 0;
};

/// Intensity-weighted centroid of |frame − background| per frame, in the
/// pixel-centre convention of the rasterizer. Throws MetricError naming the
/// first frame without foreground mass.
std::vector<Vec2> foreground_centroids(const Video& video, double background);

/// RMSE over frames between foreground centroids and the first shape of `gt`.
double trajectory_error(const Video& generated, const Trajectory& gt, double background);
/// Estimates the background as the median pixel value of the video.
double trajectory_error(const Video& generated, const Trajectory& gt);

/// Mean over frames of the MSE between frame and target outside the
/// per-frame foreground masks (H×W bool, true = foreground).
double appearance_error(const Video& generated, const TargetImage& target,
                        std::span<const torch::Tensor> fg_masks);

/// Union of discs of `radius` around each centre, as an H×W bool mask.
torch::Tensor disc_mask(std::span<const Vec2> centres, double radius, int height, int width);

/// Radius of the smallest disc enclosing the shape.
double circumradius(const ShapeSpec& shape);

/// PSNR with the [-1, 1] range as peak-to-peak signal: 10·log10(4 / MSE).
double psnr_db(const torch::Tensor& a, const torch::Tensor& b);

/// Mean absolute frame-to-frame difference (0 for one-frame videos).
double temporal_smoothness(const Video& video);

struct EvalOptions {
  EncodingVariant variant = EncodingVariant::FeatureDiff;
  int ref_index = 0;
  bool consecutive_pixel_diff = false;
  /// Extra margin (px) around shape supports excluded from the background.
  double mask_dilation = 2.0;
  /// Cap on the number of ordered cross pairs (0 = all).
  std::size_t max_pairs = 0;
};

struct EvalSummary {
  TransferMetrics cross;     // means over held-out cross pairs
  double self_psnr_db = 0;   // mean over self items
  std::size_t cross_pairs = 0;
  std::size_t self_items = 0;
};

/// Metrics for one generated cross/self pair. The target's background level
/// comes from its scene spec.
TransferMetrics pair_metrics(const Video& generated, const TransferPair& pair,
                             std::span<const LabeledVideo> corpus, double mask_dilation = 2.0);

/// Generates every ordered cross pair of `heldout` and self-reconstructs each
/// item of `self_items`.
EvalSummary evaluate_transfer(std::span<const LabeledVideo> heldout,
                              std::span<const LabeledVideo> self_items, GeneratorNet& net,
                              const EvalOptions& options);

/// Fraction of items whose real-sequence logit exceeds the mean logit of
/// `shuffles` non-identity temporal permutations of the same frames.
double temporal_shuffle_win_rate(std::span<const LabeledVideo> items, TemporalDiscriminator& net,
                                 std::uint64_t seed, int shuffles = 4);

}  // namespace dyntx
