#include "dyntx/discriminators.hpp"

#include "dyntx/errors.hpp"

namespace dyntx {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

torch::Tensor lrelu(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
}

std::int64_t head_inputs(const ModelConfig& cfg) {
  const int depth = static_cast<int>(cfg.disc_widths.size());
  return static_cast<std::int64_t>(cfg.disc_widths.back()) * (cfg.height >> depth) * (cfg.width >> depth);
}

void check_video(const ModelConfig& cfg, const torch::Tensor& v, const char* who) {
  if (v.dim() != 5 || v.size(2) != cfg.channels || v.size(3) != cfg.height || v.size(4) != cfg.width)
    throw ArgumentError(std::string(who) + ": video shape does not match the configured frame size");
}

torch::Dtype param_dtype(nn::Module& m) { return m.parameters().front().scalar_type(); }

}  // namespace

SpatialDiscriminatorImpl::SpatialDiscriminatorImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  convs_ = register_module("convs", nn::ModuleList());
  int in = 2 * cfg.channels;
  for (int w : cfg.disc_widths) {
    convs_->push_back(nn::Conv2d(nn::Conv2dOptions(in, w, 4).stride(2).padding(1)));
    in = w;
  }
  head_ = register_module("head", nn::Linear(head_inputs(cfg), 1));
}

torch::Tensor SpatialDiscriminatorImpl::forward(const torch::Tensor& videos, const torch::Tensor& targets) {
  check_video(cfg_, videos, "spatial discriminator");
  const std::int64_t b = videos.size(0), t = videos.size(1);
  if (targets.dim() != 4 || targets.size(0) != b || targets.sizes().slice(1) != videos.sizes().slice(2))
    throw ArgumentError("spatial discriminator: target shape does not match the video");
  auto x = torch::cat({videos, targets.unsqueeze(1).expand_as(videos)}, 2).flatten(0, 1);
  for (const auto& m : *convs_) x = lrelu(m->as<nn::Conv2d>()->forward(x));
  // Row-wise multiply-sum rather than a GEMM: BLAS results for a row can depend
  // on its position in the batch, which would break exact frame equivariance.
  return ((x.flatten(1) * head_->weight).sum(1) + head_->bias).view({b, t});
}

TemporalDiscriminatorImpl::TemporalDiscriminatorImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  convs_ = register_module("convs", nn::ModuleList());
  const int k = cfg.temporal_kernel;
  int in = cfg.channels;
  for (int w : cfg.disc_widths) {
    convs_->push_back(nn::Conv3d(
        nn::Conv3dOptions(in, w, {k, 4, 4}).stride({1, 2, 2}).padding({k / 2, 1, 1})));
    in = w;
  }
  head_ = register_module("head", nn::Linear(head_inputs(cfg), 1));
}

torch::Tensor TemporalDiscriminatorImpl::forward(const torch::Tensor& videos) {
  check_video(cfg_, videos, "temporal discriminator");
  if (videos.size(1) < 2)
    throw ArgumentError("temporal discriminator needs at least 2 frames, got " +
                        std::to_string(videos.size(1)));
  auto x = videos.transpose(1, 2);  // B×C×T×H×W
  for (const auto& m : *convs_) x = lrelu(m->as<nn::Conv3d>()->forward(x));
  return head_->forward(x.mean(2).flatten(1)).view({-1});
}

SpatialScore spatial_score(const Video& video, const TargetImage& target, SpatialDiscriminator& net) {
  const auto dtype = param_dtype(*net);
  auto logits = net->forward(video.frames().to(dtype).unsqueeze(0), target.pixels().to(dtype).unsqueeze(0));
  return SpatialScore{logits.squeeze(0)};
}

TemporalScore temporal_score(const Video& video, TemporalDiscriminator& net) {
  torch::NoGradGuard no_grad;
  auto logit = net->forward(video.frames().to(param_dtype(*net)).unsqueeze(0));
  return TemporalScore{logit.item<double>()};
}

}  // namespace dyntx
