#pragma once

#include <torch/torch.h>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"

namespace dyntx {

/// Per-frame realism logits conditioned on the target image.
struct SpatialScore {
  torch::Tensor logits;  // T
};

/// One motion-realism logit per sequence.
struct TemporalScore {
  double logit = 0;
};

/// Each frame is concatenated channel-wise with the target and scored by a
/// shared stack of stride-2 convs and a linear head. Frames never mix.
class SpatialDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit SpatialDiscriminatorImpl(const ModelConfig& cfg);
  /// videos B×T×C×H×W, targets B×C×H×W -> B×T logits.
  torch::Tensor forward(const torch::Tensor& videos, const torch::Tensor& targets);

 private:
  ModelConfig cfg_;
  torch::nn::ModuleList convs_;
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(SpatialDiscriminator);

/// 3-D convs over (t, h, w) with stride 2 in space only, then a mean over
/// time and a linear head; any T ≥ 2 is scorable.
class TemporalDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit TemporalDiscriminatorImpl(const ModelConfig& cfg);
  /// videos B×T×C×H×W -> B logits.
  torch::Tensor forward(const torch::Tensor& videos);

 private:
  ModelConfig cfg_;
  torch::nn::ModuleList convs_;
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(TemporalDiscriminator);

SpatialScore spatial_score(const Video& video, const TargetImage& target, SpatialDiscriminator& net);
TemporalScore temporal_score(const Video& video, TemporalDiscriminator& net);

}  // namespace dyntx
