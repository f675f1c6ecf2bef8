#include "dyntx/generator.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include "dyntx/errors.hpp"

namespace dyntx {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

torch::Tensor lrelu(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
}

int level_channels(const ModelConfig& cfg, int level) {
  return level == 0 ? cfg.stem_channels : cfg.widths.at(static_cast<std::size_t>(level - 1));
}

}  // namespace

GeneratorCoreImpl::GeneratorCoreImpl(const ModelConfig& cfg) : cfg_(cfg) {
  const int levels = cfg.levels();
  const int ch = cfg.hidden_channels;
  const int in = cfg.dyn_channels + cfg.noise_channels;
  init_ = register_module("init", nn::Conv2d(nn::Conv2dOptions(level_channels(cfg, levels), ch, 3).padding(1)));
  gates_ = register_module("gates", nn::Conv2d(nn::Conv2dOptions(in + ch, 2 * ch, 3).padding(1)));
  candidate_ = register_module("candidate", nn::Conv2d(nn::Conv2dOptions(in + ch, ch, 3).padding(1)));
  up_ = register_module("up", nn::ModuleList());
  int channels = ch + level_channels(cfg, levels);
  for (int l = levels; l >= 1; --l) {
    const int skip = level_channels(cfg, l - 1);
    up_->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(channels, skip, 4).stride(2).padding(1)));
    channels = 2 * skip;
  }
  out_ = register_module("out", nn::Conv2d(nn::Conv2dOptions(channels, cfg.channels, 3).padding(1)));
}

GeneratorState GeneratorCoreImpl::init_state(const AppearanceCode& appearance) {
  if (appearance.depth() != cfg_.levels())
    throw ConfigError("appearance code has " + std::to_string(appearance.depth()) +
                      " levels, generator expects " + std::to_string(cfg_.levels()));
  const auto& bottleneck = appearance.bottleneck();
  if (bottleneck.size(1) != level_channels(cfg_, cfg_.levels()))
    throw ConfigError("appearance bottleneck has " + std::to_string(bottleneck.size(1)) +
                      " channels, generator expects " +
                      std::to_string(level_channels(cfg_, cfg_.levels())));
  return GeneratorState{torch::tanh(init_->forward(bottleneck)), 0};
}

GeneratorState GeneratorCoreImpl::advance(const GeneratorState& state, const torch::Tensor& code) {
  const auto& h = state.hidden;
  auto gates = torch::sigmoid(gates_->forward(torch::cat({code, h}, 1))).chunk(2, 1);
  const auto& update = gates[0];
  const auto& reset = gates[1];
  auto candidate = torch::tanh(candidate_->forward(torch::cat({code, reset * h}, 1)));
  return GeneratorState{h + update * (candidate - h), state.t + 1};
}

torch::Tensor GeneratorCoreImpl::decode(const torch::Tensor& hidden,
                                        const std::vector<torch::Tensor>& appearance) {
  const int levels = cfg_.levels();
  auto y = torch::cat({hidden, appearance[static_cast<std::size_t>(levels)]}, 1);
  int l = levels - 1;
  for (const auto& m : *up_) {
    y = lrelu(m->as<nn::ConvTranspose2d>()->forward(y));
    y = torch::cat({y, appearance[static_cast<std::size_t>(l)]}, 1);
    --l;
  }
  return torch::tanh(out_->forward(y));
}

GeneratorNetImpl::GeneratorNetImpl(const ModelConfig& c) : cfg(c) {
  cfg.validate();
  appearance_encoder = register_module("appearance_encoder", AppearanceEncoder(cfg));
  frame_encoder = register_module("frame_encoder", FrameEncoder(cfg));
  core = register_module("core", GeneratorCore(cfg));
}

torch::Tensor GeneratorNetImpl::noise_for(std::uint64_t seed, std::int64_t t, std::int64_t batch,
                                          torch::Dtype dtype) const {
  if (cfg.noise_channels == 0) return {};
  auto gen = at::detail::createCPUGenerator(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t));
  return torch::randn({batch, cfg.noise_channels, cfg.bottleneck_height(), cfg.bottleneck_width()}, gen,
                      torch::TensorOptions().dtype(dtype));
}

torch::Tensor GeneratorNetImpl::forward(const torch::Tensor& targets, const DynamicsCodeSeq& codes,
                                        std::uint64_t noise_seed) {
  const std::int64_t b = targets.size(0), t_len = codes.length();
  if (codes.codes.size(0) != b) throw ArgumentError("generator: batch size of targets and codes differ");
  const auto dtype = codes.codes.scalar_type();
  AppearanceCode app = appearance_encoder->forward(targets.to(dtype));
  GeneratorState state = core->init_state(app);
  std::vector<torch::Tensor> hidden;
  hidden.reserve(static_cast<std::size_t>(t_len));
  for (std::int64_t t = 0; t < t_len; ++t) {
    torch::Tensor code = codes.at(t);
    if (cfg.noise_channels > 0) code = torch::cat({code, noise_for(noise_seed, t, b, dtype)}, 1);
    state = core->advance(state, code);
    hidden.push_back(state.hidden);
  }
  // N = B·T rows ordered batch-major, matching flatten(0, 1) of B×T×…
  auto stacked = torch::stack(hidden, 1).flatten(0, 1);
  std::vector<torch::Tensor> skips;
  skips.reserve(app.levels.size());
  for (const auto& level : app.levels) skips.push_back(level.repeat_interleave(t_len, 0));
  auto frames = core->decode(stacked, skips);
  return frames.view({b, t_len, frames.size(1), frames.size(2), frames.size(3)});
}

GeneratorState init_state(const AppearanceCode& appearance, GeneratorNet& net) {
  return net->core->init_state(appearance);
}

StepResult step(const GeneratorState& state, const torch::Tensor& code_t,
                const AppearanceCode& appearance, GeneratorNet& net, std::uint64_t seed) {
  const bool single = code_t.dim() == 3;
  torch::Tensor code = single ? code_t.unsqueeze(0) : code_t;
  const auto& cfg = net->cfg;
  if (code.size(1) != cfg.dyn_channels || code.size(2) != cfg.bottleneck_height() ||
      code.size(3) != cfg.bottleneck_width())
    throw ArgumentError("step: dynamics code shape does not match the generator configuration");
  if (cfg.noise_channels > 0)
    code = torch::cat({code, net->noise_for(seed, state.t, code.size(0), code.scalar_type())}, 1);
  GeneratorState next = net->core->advance(state, code);
  torch::Tensor frame = net->core->decode(next.hidden, appearance.levels);
  if (!torch::isfinite(frame).all().item<bool>())
    throw NumericalError("non-finite generated frame at index " + std::to_string(state.t), state.t,
                         "frame");
  return StepResult{single ? frame.squeeze(0) : frame, std::move(next)};
}

GeneratedVideo generate(const TargetImage& target, const DynamicsCodeSeq& codes, GeneratorNet& net,
                        std::uint64_t seed, Provenance provenance, int fps) {
  if (codes.codes.dim() != 5 || codes.codes.size(0) != 1)
    throw ArgumentError("generate: expected the codes of a single source video");
  torch::NoGradGuard no_grad;
  const std::int64_t t_len = codes.length();
  AppearanceCode app = encode_appearance(target, net->appearance_encoder);
  GeneratorState state = init_state(app, net);
  auto out = torch::empty({t_len, target.channels(), target.height(), target.width()}, torch::kFloat32);
  for (std::int64_t t = 0; t < t_len; ++t) {
    StepResult r = step(state, codes.at(t), app, net, seed);
    out[t].copy_(r.frame.squeeze(0));
    state = std::move(r.next);
  }
  provenance.variant = codes.variant;
  provenance.seed = seed;
  return GeneratedVideo{Video(out, fps), std::move(provenance)};
}

}  // namespace dyntx
