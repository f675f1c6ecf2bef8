#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"
#include "dyntx/discriminators.hpp"
#include "dyntx/generator.hpp"

namespace dyntx {

/// The three trainable networks. Parameters are initialised from
/// torch::manual_seed(seed) and cast to `dtype`.
struct Networks {
  GeneratorNet generator{nullptr};
  SpatialDiscriminator spatial{nullptr};
  TemporalDiscriminator temporal{nullptr};

  Networks(const ModelConfig& cfg, torch::Dtype dtype, std::int64_t seed);

  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
  /// Every parameter keyed "generator/…", "spatial/…", "temporal/…".
  std::vector<std::pair<std::string, torch::Tensor>> named_parameters() const;
};

/// Adam with bias correction over a fixed parameter list. State is exposed
/// for checkpointing.
class Adam {
 public:
  Adam(std::vector<torch::Tensor> params, double lr, double beta1, double beta2, double eps);

  void zero_grad();
  void step();

  std::vector<torch::Tensor>& params() { return params_; }
  std::vector<torch::Tensor>& exp_avg() { return exp_avg_; }
  std::vector<torch::Tensor>& exp_avg_sq() { return exp_avg_sq_; }
  const std::vector<torch::Tensor>& exp_avg() const { return exp_avg_; }
  const std::vector<torch::Tensor>& exp_avg_sq() const { return exp_avg_sq_; }

  std::int64_t step_count = 0;
  double lr;

 private:
  std::vector<torch::Tensor> params_;
  std::vector<torch::Tensor> exp_avg_;
  std::vector<torch::Tensor> exp_avg_sq_;
  double beta1_, beta2_, eps_;
};

/// Halves (by `plateau_factor`) both learning rates when the windowed mean
/// generator loss has not improved for `plateau_patience` windows.
struct PlateauSchedule {
  double lr_scale = 1.0;
  std::optional<double> best;
  int bad_windows = 0;
  double window_sum = 0;
  int window_count = 0;

  bool operator==(const PlateauSchedule&) const = default;
};

/// Resumable training state.
struct Checkpoint {
  TrainingConfig config;
  Networks nets;
  Adam opt_g;
  Adam opt_d;
  std::int64_t step = 0;
  std::mt19937_64 rng;
  PlateauSchedule schedule;

  explicit Checkpoint(const TrainingConfig& cfg);
  Checkpoint(const Checkpoint&) = delete;
  Checkpoint& operator=(const Checkpoint&) = delete;
  Checkpoint(Checkpoint&&) = default;
  Checkpoint& operator=(Checkpoint&&) = default;
};

struct LossBundle {
  double g_adv_spatial = 0;
  double g_adv_temporal = 0;
  std::optional<double> g_recon;  // absent when the batch holds no self pairs
  double d_spatial = 0;
  double d_temporal = 0;
  std::int64_t step = 0;

  /// Weighted generator objective; an absent g_recon contributes nothing.
  double generator_total(const TrainingConfig& cfg) const;
  bool operator==(const LossBundle&) const = default;
};

/// Discriminator objective: mean over logits of the real and fake terms.
torch::Tensor discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits,
                                 GanLoss kind);
/// Generator adversarial objective, mean over logits.
torch::Tensor generator_adv_loss(const torch::Tensor& fake_logits, GanLoss kind);

/// Evaluates every loss term for a batch with the current parameters (no
/// update). Spatial adversarial terms average over frames.
LossBundle compute_losses(std::span<const TransferPair> batch, Networks& nets, const TrainingConfig& cfg);
LossBundle compute_losses(const TransferPair& pair, Networks& nets, const TrainingConfig& cfg);

/// One discriminator update (both adversaries) followed by one
/// generator+encoder update. Increments ckpt.step.
LossBundle train_step(std::span<const TransferPair> batch, Checkpoint& ckpt);

/// Draws the batch for the next step from ckpt.rng: the first
/// round(batch_size·self_fraction) pairs are self pairs, the rest cross.
std::vector<TransferPair> next_batch(std::span<const LabeledVideo> corpus, Checkpoint& ckpt);

struct TrainOptions {
  /// When set, checkpoints, losses.csv and config.json are written here.
  std::optional<std::filesystem::path> run_dir;
  bool resume = false;
  std::function<void(const LossBundle&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossBundle> curve;  // steps run by this call
};

TrainResult train(std::span<const LabeledVideo> corpus, const TrainingConfig& cfg,
                  const TrainOptions& options = {});

/// Container: 8-byte magic "DYNTXCKP", little-endian u64 manifest length,
/// JSON manifest, then raw little-endian tensor blobs in manifest order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Loads into the architecture described by `expected`; a stored tensor of a
/// different shape raises ShapeMismatchError naming it.
Checkpoint load_checkpoint(const std::filesystem::path& path, const TrainingConfig& expected);
nlohmann::json read_checkpoint_manifest(const std::filesystem::path& path);

/// "step_%08d.ckpt"
std::string checkpoint_name(std::int64_t step);
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);

}  // namespace dyntx
