#include <cmath>

#include "dyntx/errors.hpp"
#include "dyntx/training.hpp"
#include "support/fixtures.hpp"
#include "doctest.h"

using namespace dyntx;
using dyntx::testing::bit_equal;
using dyntx::testing::small_training;

namespace {

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

bool unchanged(const std::vector<torch::Tensor>& before, const std::vector<torch::Tensor>& after) {
  for (std::size_t i = 0; i < before.size(); ++i)
    if (!torch::equal(before[i], after[i])) return false;
  return true;
}

std::vector<LabeledVideo> corpus16(int n = 4, std::int64_t seed = 100) {
  return dyntx::testing::random_corpus(n, seed, 16, 4);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("adversarial losses match their closed forms") {
  auto real = torch::tensor({0.5, -1.0, 2.0}, torch::kFloat64);
  auto fake = torch::tensor({-0.3, 1.5}, torch::kFloat64);
  auto sp = [](double x) { return std::log1p(std::exp(x)); };
  const double ns_d = (sp(-0.5) + sp(1.0) + sp(-2.0)) / 3 + (sp(-0.3) + sp(1.5)) / 2;
  CHECK(discriminator_loss(real, fake, GanLoss::NonSaturating).item<double>() == doctest::Approx(ns_d));
  CHECK(generator_adv_loss(fake, GanLoss::NonSaturating).item<double>() ==
        doctest::Approx((sp(0.3) + sp(-1.5)) / 2));
  const double ls_d = 0.5 * ((0.25 + 4.0 + 1.0) / 3 + (0.09 + 2.25) / 2);
  CHECK(discriminator_loss(real, fake, GanLoss::LeastSquares).item<double>() == doctest::Approx(ls_d));
  CHECK(generator_adv_loss(fake, GanLoss::LeastSquares).item<double>() ==
        doctest::Approx(0.5 * (1.69 + 0.25) / 2));
  const double h_d = (0.5 + 2.0 + 0.0) / 3 + (0.7 + 2.5) / 2;
  CHECK(discriminator_loss(real, fake, GanLoss::Hinge).item<double>() == doctest::Approx(h_d));
  CHECK(generator_adv_loss(fake, GanLoss::Hinge).item<double>() == doctest::Approx(-0.6));
}

TEST_CASE("zero logits give ln 2 per adversarial term") {
  auto cfg = small_training();
  Networks nets(cfg.model, torch::kFloat32, 0);
  dyntx::testing::zero_parameters(*nets.spatial);
  dyntx::testing::zero_parameters(*nets.temporal);
  auto corpus = corpus16();
  auto l = compute_losses(make_pair(corpus, 0, 1), nets, cfg);
  const double ln2 = std::log(2.0);
  CHECK(l.g_adv_spatial == doctest::Approx(ln2));
  CHECK(l.g_adv_temporal == doctest::Approx(ln2));
  CHECK(l.d_spatial == doctest::Approx(2 * ln2));
  CHECK(l.d_temporal == doctest::Approx(2 * ln2));
}

TEST_CASE("reconstruction loss vanishes when the output equals the ground truth") {
  auto cfg = small_training();
  Networks nets(cfg.model, torch::kFloat32, 1);
  auto corpus = corpus16();
  auto pair = make_pair(corpus, 2, 2);
  torch::Tensor fake;
  {
    torch::NoGradGuard g;
    auto codes = encode_dynamics(pair.source.frames().unsqueeze(0), cfg.encoding,
                                 nets.generator->frame_encoder, cfg.ref_index);
    fake = nets.generator->forward(pair.target.pixels().unsqueeze(0), codes)[0];
  }
  pair.gt_video = Video(fake.clamp(-1, 1));
  auto l = compute_losses(pair, nets, cfg);
  REQUIRE(l.g_recon.has_value());
  CHECK(*l.g_recon == 0.0);
}

TEST_CASE("cross-only batches have no reconstruction term") {
  auto cfg = small_training();
  cfg.weight_recon = 0;
  Networks nets(cfg.model, torch::kFloat32, 2);
  auto corpus = corpus16();
  auto l = compute_losses(make_pair(corpus, 0, 3), nets, cfg);
  CHECK_FALSE(l.g_recon.has_value());
  CHECK(l.generator_total(cfg) == doctest::Approx(l.g_adv_spatial + l.g_adv_temporal));
}

TEST_CASE("batches hold round(B * self_fraction) self pairs first") {
  auto cfg = small_training();
  cfg.batch_size = 4;
  Checkpoint ckpt(cfg);
  auto corpus = corpus16(5);
  for (int k = 0; k < 10; ++k) {
    auto batch = next_batch(corpus, ckpt);
    REQUIRE(batch.size() == 4);
    CHECK(batch[0].mode == PairMode::Self);
    CHECK(batch[1].mode == PairMode::Self);
    CHECK(batch[2].mode == PairMode::Cross);
    CHECK(batch[3].mode == PairMode::Cross);
  }
}

TEST_CASE("a zero learning rate leaves every parameter unchanged") {
  auto cfg = small_training();
  cfg.lr_g = 0;
  cfg.lr_d = 0;
  Checkpoint ckpt(cfg);
  auto corpus = corpus16();
  auto g = snapshot(ckpt.nets.generator_parameters());
  auto d = snapshot(ckpt.nets.discriminator_parameters());
  for (int k = 0; k < 3; ++k) train_step(next_batch(corpus, ckpt), ckpt);
  CHECK(ckpt.step == 3);
  CHECK(unchanged(g, ckpt.nets.generator_parameters()));
  CHECK(unchanged(d, ckpt.nets.discriminator_parameters()));
}

TEST_CASE("each update touches only its own parameters") {
  auto corpus = corpus16();
  {
    auto cfg = small_training();
    cfg.lr_g = 0;
    Checkpoint ckpt(cfg);
    auto g = snapshot(ckpt.nets.generator_parameters());
    auto d = snapshot(ckpt.nets.discriminator_parameters());
    train_step(next_batch(corpus, ckpt), ckpt);
    CHECK(unchanged(g, ckpt.nets.generator_parameters()));
    CHECK_FALSE(unchanged(d, ckpt.nets.discriminator_parameters()));
  }
  {
    auto cfg = small_training();
    cfg.lr_d = 0;
    Checkpoint ckpt(cfg);
    auto g = snapshot(ckpt.nets.generator_parameters());
    auto d = snapshot(ckpt.nets.discriminator_parameters());
    train_step(next_batch(corpus, ckpt), ckpt);
    CHECK_FALSE(unchanged(g, ckpt.nets.generator_parameters()));
    CHECK(unchanged(d, ckpt.nets.discriminator_parameters()));
  }
}

TEST_CASE("adam matches the bias-corrected update rule") {
  auto w = torch::tensor({1.0, -2.0}, torch::kFloat64).requires_grad_();
  Adam opt({w}, 0.1, 0.9, 0.99, 1e-8);
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  for (int t = 1; t <= 5; ++t) {
    opt.zero_grad();
    (w.square().sum() * 0.5 + w[0] * 3).backward();
    opt.step();
    const double g[2] = {x[0] + 3, x[1]};
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.99 * v[i] + 0.01 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.99, t));
      x[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(w[0].item<double>() == doctest::Approx(x[0]).epsilon(1e-12));
    CHECK(w[1].item<double>() == doctest::Approx(x[1]).epsilon(1e-12));
  }
  CHECK(opt.step_count == 5);
}

TEST_CASE("identical runs produce identical loss streams") {
  auto cfg = small_training(15);
  auto corpus = corpus16();
  auto a = train(corpus, cfg);
  auto b = train(corpus, cfg);
  REQUIRE(a.curve.size() == 15);
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i] == b.curve[i]);
  cfg.seed = 1;
  auto c = train(corpus, cfg);
  CHECK_FALSE(a.curve.back() == c.curve.back());
}

TEST_CASE("every loss term stays finite on a short default-shaped run") {
  auto cfg = small_training(30);
  auto corpus = corpus16(6);
  auto r = train(corpus, cfg);
  for (const auto& l : r.curve) {
    CHECK(std::isfinite(l.g_adv_spatial));
    CHECK(std::isfinite(l.g_adv_temporal));
    CHECK(std::isfinite(l.d_spatial));
    CHECK(std::isfinite(l.d_temporal));
    REQUIRE(l.g_recon.has_value());
    CHECK(std::isfinite(*l.g_recon));
  }
}

TEST_CASE("reconstruction-only training improves under the plateau schedule") {
  auto cfg = small_training(240);
  cfg.weight_adv_spatial = 0;
  cfg.weight_adv_temporal = 0;
  cfg.weight_recon = 1;
  cfg.self_fraction = 1;
  cfg.batch_size = 1;
  cfg.lr_g = 1e-3;
  cfg.plateau_patience = 1;
  cfg.plateau_window = 40;
  auto corpus = corpus16(1);
  auto r = train(corpus, cfg);
  std::vector<double> means;
  for (std::size_t w = 0; w < 6; ++w) {
    double s = 0;
    for (std::size_t i = w * 40; i < (w + 1) * 40; ++i) s += *r.curve[i].g_recon;
    means.push_back(s / 40);
  }
  for (std::size_t w = 1; w < means.size(); ++w) {
    CAPTURE(w);
    CHECK(means[w] <= means[w - 1]);
  }
}

TEST_CASE("divergence raises a numerical error and leaves an emergency checkpoint") {
  auto cfg = small_training(50);
  cfg.lr_g = 1e30;
  cfg.lr_d = 1e30;
  auto dir = dyntx::testing::temp_dir("diverge");
  auto corpus = corpus16();
  TrainOptions opts;
  opts.run_dir = dir;
  CHECK_THROWS_AS(train(corpus, cfg, opts), NumericalError);
  bool found = false;
  for (const auto& e : std::filesystem::directory_iterator(dir / "checkpoints"))
    if (e.path().filename().string().rfind("emergency_", 0) == 0) found = true;
  CHECK(found);
}

TEST_CASE("a corpus that does not match the model is rejected") {
  auto cfg = small_training();
  auto corpus = dyntx::testing::random_corpus(2, 0, 32, 4);
  CHECK_THROWS_AS(train(corpus, cfg), ConfigError);
}

}  // TEST_SUITE
