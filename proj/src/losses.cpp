#include <cmath>

#include "dyntx/errors.hpp"
#include "dyntx/training.hpp"

namespace dyntx {

namespace F = torch::nn::functional;

double LossBundle::generator_total(const TrainingConfig& cfg) const {
  double total = cfg.weight_adv_spatial * g_adv_spatial + cfg.weight_adv_temporal * g_adv_temporal;
  if (g_recon) total += cfg.weight_recon * *g_recon;
  return total;
}

torch::Tensor discriminator_loss(const torch::Tensor& real, const torch::Tensor& fake, GanLoss kind) {
  switch (kind) {
    case GanLoss::NonSaturating:
      return F::softplus(-real).mean() + F::softplus(fake).mean();
    case GanLoss::LeastSquares:
      return 0.5 * ((real - 1).square().mean() + fake.square().mean());
    case GanLoss::Hinge:
      return torch::relu(1 - real).mean() + torch::relu(1 + fake).mean();
  }
  throw ConfigError("unknown gan loss");
}

torch::Tensor generator_adv_loss(const torch::Tensor& fake, GanLoss kind) {
  switch (kind) {
    case GanLoss::NonSaturating:
      return F::softplus(-fake).mean();
    case GanLoss::LeastSquares:
      return 0.5 * (fake - 1).square().mean();
    case GanLoss::Hinge:
      return -fake.mean();
  }
  throw ConfigError("unknown gan loss");
}

}  // namespace dyntx
