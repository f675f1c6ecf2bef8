#include "dyntx/encoders.hpp"

#include "dyntx/errors.hpp"

namespace dyntx {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr double kSlope = 0.2;

torch::Tensor lrelu(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kSlope));
}

}  // namespace

ConvEncoderImpl::ConvEncoderImpl(int in_channels, int stem_channels, const std::vector<int>& widths)
    : stem_channels_(stem_channels), widths_(widths) {
  stem_ = register_module("stem", nn::Conv2d(nn::Conv2dOptions(in_channels, stem_channels, 3).padding(1)));
  down_ = register_module("down", nn::ModuleList());
  int in = stem_channels;
  for (int w : widths) {
    down_->push_back(nn::Conv2d(nn::Conv2dOptions(in, w, 4).stride(2).padding(1)));
    in = w;
  }
}

int ConvEncoderImpl::level_channels(int level) const {
  return level == 0 ? stem_channels_ : widths_.at(static_cast<std::size_t>(level - 1));
}

std::vector<torch::Tensor> ConvEncoderImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> levels;
  levels.reserve(down_->size() + 1);
  levels.push_back(lrelu(stem_->forward(x)));
  for (const auto& m : *down_) levels.push_back(lrelu(m->as<nn::Conv2d>()->forward(levels.back())));
  return levels;
}

AppearanceEncoderImpl::AppearanceEncoderImpl(const ModelConfig& cfg) : cfg_(cfg) {
  trunk_ = register_module("trunk", ConvEncoder(cfg.channels, cfg.stem_channels, cfg.widths));
}

AppearanceCode AppearanceEncoderImpl::forward(const torch::Tensor& targets) {
  check_input_shape(cfg_, targets.size(1), targets.size(2), targets.size(3));
  return AppearanceCode{trunk_->forward(targets)};
}

FrameEncoderImpl::FrameEncoderImpl(const ModelConfig& cfg) : cfg_(cfg) {
  trunk_ = register_module("trunk", ConvEncoder(cfg.channels, cfg.stem_channels, cfg.widths));
  project_ = register_module("project", nn::Conv2d(nn::Conv2dOptions(cfg.widths.back(), cfg.dyn_channels, 1)));
}

torch::Tensor FrameEncoderImpl::forward(const torch::Tensor& frames) {
  check_input_shape(cfg_, frames.size(1), frames.size(2), frames.size(3));
  return project_->forward(trunk_->forward(frames).back());
}

void check_input_shape(const ModelConfig& cfg, std::int64_t channels, std::int64_t height,
                       std::int64_t width) {
  const std::int64_t div = std::int64_t{1} << cfg.levels();
  if (height % div != 0 || width % div != 0)
    throw ConfigError("input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by 2^" + std::to_string(cfg.levels()));
  if (channels != cfg.channels || height != cfg.height || width != cfg.width)
    throw ConfigError("input shape " + std::to_string(channels) + "x" + std::to_string(height) + "x" +
                      std::to_string(width) + " does not match the configured " +
                      std::to_string(cfg.channels) + "x" + std::to_string(cfg.height) + "x" +
                      std::to_string(cfg.width));
}

AppearanceCode encode_appearance(const TargetImage& target, AppearanceEncoder& encoder) {
  const auto dtype = encoder->parameters().front().scalar_type();
  return encoder->forward(target.pixels().to(dtype).unsqueeze(0));
}

torch::Tensor encode_frame_features(const torch::Tensor& frame, FrameEncoder& encoder) {
  if (frame.dim() != 3) throw ArgumentError("encode_frame_features: expected a C×H×W frame");
  const auto dtype = encoder->parameters().front().scalar_type();
  return encoder->forward(frame.to(dtype).unsqueeze(0)).squeeze(0);
}

torch::Tensor suppress_appearance(const torch::Tensor& features, std::int64_t ref_index) {
  if (features.dim() != 4 && features.dim() != 5)
    throw ArgumentError("suppress_appearance: expected T×C×H×W or B×T×C×H×W features");
  const std::int64_t tdim = features.dim() - 4;
  const std::int64_t length = features.size(tdim);
  if (ref_index < 0 || ref_index >= length)
    throw ArgumentError("suppress_appearance: ref_index " + std::to_string(ref_index) +
                        " out of range for " + std::to_string(length) + " frames");
  return features - features.select(tdim, ref_index).unsqueeze(tdim);
}

constexpr std::int64_t kInferenceChunk = 32;

DynamicsCodeSeq encode_dynamics(const torch::Tensor& sources, EncodingVariant variant,
                                FrameEncoder& encoder, int ref_index, bool consecutive_pixel_diff) {
  if (sources.dim() != 5) throw ArgumentError("encode_dynamics: expected B×T×C×H×W sources");
  const std::int64_t b = sources.size(0), t = sources.size(1);
  if (ref_index < 0 || ref_index >= t)
    throw ArgumentError("encode_dynamics: ref_index " + std::to_string(ref_index) +
                        " out of range for " + std::to_string(t) + " frames");
  const auto dtype = encoder->parameters().front().scalar_type();
  torch::Tensor input = sources.to(dtype);
  if (variant == EncodingVariant::PixelDiff) {
    if (consecutive_pixel_diff) {
      auto prev = torch::cat({input.narrow(1, 0, 1), input.narrow(1, 0, t - 1)}, 1);
      input = input - prev;
    } else {
      input = input - input.select(1, ref_index).unsqueeze(1);
    }
  }
  const auto flat = input.flatten(0, 1);
  const std::int64_t n = flat.size(0);
  torch::Tensor features;
  if (torch::GradMode::is_enabled() || n <= kInferenceChunk) {
    features = encoder->forward(flat);
  } else {
    // Long clips at inference: bound activation memory by encoding in chunks.
    std::vector<torch::Tensor> parts;
    for (std::int64_t i = 0; i < n; i += kInferenceChunk)
      parts.push_back(encoder->forward(flat.narrow(0, i, std::min(kInferenceChunk, n - i))));
    features = torch::cat(parts);
  }
  features = features.view({b, t, features.size(1), features.size(2), features.size(3)});
  if (variant == EncodingVariant::FeatureDiff) features = suppress_appearance(features, ref_index);
  return DynamicsCodeSeq{features, variant, ref_index};
}

DynamicsCodeSeq encode_dynamics(const Video& source, EncodingVariant variant, FrameEncoder& encoder,
                                int ref_index, bool consecutive_pixel_diff) {
  return encode_dynamics(source.frames().unsqueeze(0), variant, encoder, ref_index,
                         consecutive_pixel_diff);
}

}  // namespace dyntx
