#pragma once

#include <vector>

#include <torch/torch.h>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"

namespace dyntx {

/// Multi-scale encoding of target images. levels[l] is B×C_l×(H/2^l)×(W/2^l)
/// for l = 0..L; level 0 is the full-resolution skip, level L the bottleneck.
/// A single TargetImage encodes with B = 1.
struct AppearanceCode {
  std::vector<torch::Tensor> levels;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  const torch::Tensor& bottleneck() const { return levels.back(); }
};

/// Per-timestep dynamics codes, B×T×C_d×H_d×W_d (B = 1 for a single video).
struct DynamicsCodeSeq {
  torch::Tensor codes;
  EncodingVariant variant = EncodingVariant::FeatureDiff;
  int ref_index = 0;

  std::int64_t length() const { return codes.size(1); }
  /// Code at time t for every batch item: B×C_d×H_d×W_d.
  torch::Tensor at(std::int64_t t) const { return codes.select(1, t); }
};

/// Stem conv (3×3) followed by one stride-2 4×4 conv per level, each with
/// leaky ReLU. Returns every level.
class ConvEncoderImpl : public torch::nn::Module {
 public:
  ConvEncoderImpl(int in_channels, int stem_channels, const std::vector<int>& widths);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);

  int level_channels(int level) const;

 private:
  torch::nn::Conv2d stem_{nullptr};
  torch::nn::ModuleList down_;
  int stem_channels_;
  std::vector<int> widths_;
};
TORCH_MODULE(ConvEncoder);

class AppearanceEncoderImpl : public torch::nn::Module {
 public:
  explicit AppearanceEncoderImpl(const ModelConfig& cfg);
  AppearanceCode forward(const torch::Tensor& targets);  // B×C×H×W

  int level_channels(int level) const { return trunk_->level_channels(level); }

 private:
  ConvEncoder trunk_{nullptr};
  ModelConfig cfg_;
};
TORCH_MODULE(AppearanceEncoder);

/// Source-frame encoder: conv trunk plus a linear 1×1 projection to
/// dyn_channels at the bottleneck resolution. Shared across frames.
class FrameEncoderImpl : public torch::nn::Module {
 public:
  explicit FrameEncoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& frames);  // N×C×H×W -> N×C_d×H_d×W_d

 private:
  ConvEncoder trunk_{nullptr};
  torch::nn::Conv2d project_{nullptr};
  ModelConfig cfg_;
};
TORCH_MODULE(FrameEncoder);

/// Throws ConfigError unless H and W are divisible by 2^L for `cfg`, and the
/// channel count matches.
void check_input_shape(const ModelConfig& cfg, std::int64_t channels, std::int64_t height,
                       std::int64_t width);

AppearanceCode encode_appearance(const TargetImage& target, AppearanceEncoder& encoder);

/// C_d×H_d×W_d features of one frame.
torch::Tensor encode_frame_features(const torch::Tensor& frame, FrameEncoder& encoder);

/// output[t] = features[t] − features[ref_index] along the time axis. Accepts
/// T×… or B×T×… tensors (time is dim 0 for 4-d input, dim 1 for 5-d input).
torch::Tensor suppress_appearance(const torch::Tensor& features, std::int64_t ref_index);

/// Batched form: sources is B×T×C×H×W.
DynamicsCodeSeq encode_dynamics(const torch::Tensor& sources, EncodingVariant variant,
                                FrameEncoder& encoder, int ref_index = 0,
                                bool consecutive_pixel_diff = false);

DynamicsCodeSeq encode_dynamics(const Video& source, EncodingVariant variant, FrameEncoder& encoder,
                                int ref_index = 0, bool consecutive_pixel_diff = false);

}  // namespace dyntx
