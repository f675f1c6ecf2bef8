#pragma once

#include <cstdint>
#include <string>

#include <torch/torch.h>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"
#include "dyntx/encoders.hpp"

namespace dyntx {

/// Recurrent state at the bottleneck resolution: B×C_h×H_L×W_L.
struct GeneratorState {
  torch::Tensor hidden;
  std::int64_t t = 0;
};

/// Recurrent core and decoder. The hidden state is initialised from the
/// appearance bottleneck and updated by a convolutional GRU on the dynamics
/// code; each frame is decoded by stride-2 transposed convs with skip
/// connections from every appearance level and a tanh output.
class GeneratorCoreImpl : public torch::nn::Module {
 public:
  explicit GeneratorCoreImpl(const ModelConfig& cfg);

  GeneratorState init_state(const AppearanceCode& appearance);
  /// GRU update only; `code` is B×(C_d + noise)×H_L×W_L.
  GeneratorState advance(const GeneratorState& state, const torch::Tensor& code);
  /// hidden N×C_h×H_L×W_L with appearance levels of batch N -> N×C×H×W frames.
  torch::Tensor decode(const torch::Tensor& hidden, const std::vector<torch::Tensor>& appearance);

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  torch::nn::Conv2d init_{nullptr};
  torch::nn::Conv2d gates_{nullptr};
  torch::nn::Conv2d candidate_{nullptr};
  torch::nn::ModuleList up_;
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(GeneratorCore);

/// Everything optimised by the generator update: both encoders and the core.
class GeneratorNetImpl : public torch::nn::Module {
 public:
  explicit GeneratorNetImpl(const ModelConfig& cfg);

  /// Training path: targets B×C×H×W, codes from encode_dynamics. Runs the
  /// recurrence sequentially and decodes all frames in one batch.
  /// Returns B×T×C×H×W.
  torch::Tensor forward(const torch::Tensor& targets, const DynamicsCodeSeq& codes,
                        std::uint64_t noise_seed = 0);

  /// Noise map for step t (empty tensor when noise_channels = 0).
  torch::Tensor noise_for(std::uint64_t seed, std::int64_t t, std::int64_t batch,
                          torch::Dtype dtype) const;

  AppearanceEncoder appearance_encoder{nullptr};
  FrameEncoder frame_encoder{nullptr};
  GeneratorCore core{nullptr};
  ModelConfig cfg;
};
TORCH_MODULE(GeneratorNet);

struct Provenance {
  std::string source_id;
  std::string target_id;
  EncodingVariant variant = EncodingVariant::FeatureDiff;
  std::int64_t checkpoint_step = 0;
  std::uint64_t seed = 0;
};

struct GeneratedVideo {
  Video video;
  Provenance provenance;
};

GeneratorState init_state(const AppearanceCode& appearance, GeneratorNet& net);

struct StepResult {
  torch::Tensor frame;  // C×H×W (B×C×H×W for batched states)
  GeneratorState next;
};

/// One streaming generation step. Throws NumericalError carrying the frame
/// index when the frame is not finite.
StepResult step(const GeneratorState& state, const torch::Tensor& code_t,
                const AppearanceCode& appearance, GeneratorNet& net, std::uint64_t seed = 0);

/// Streams init_state + T steps without building an autograd graph, so
/// memory beyond the output video is constant in T.
GeneratedVideo generate(const TargetImage& target, const DynamicsCodeSeq& codes, GeneratorNet& net,
                        std::uint64_t seed, Provenance provenance = {}, int fps = 8);

}  // namespace dyntx
