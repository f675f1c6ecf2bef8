#include "dyntx/discriminators.hpp"
#include "dyntx/errors.hpp"
#include "support/fixtures.hpp"
#include "doctest.h"

using namespace dyntx;

TEST_SUITE("discriminators") {

TEST_CASE("spatial logits are exactly frame-permutation equivariant") {
  torch::manual_seed(0);
  ModelConfig cfg;
  SpatialDiscriminator d(cfg);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t t = 2 + trial;
    auto video = torch::rand({1, t, 1, 32, 32}) * 2 - 1;
    auto target = torch::rand({1, 1, 32, 32}) * 2 - 1;
    auto perm = torch::randperm(t);
    torch::NoGradGuard g;
    auto a = d->forward(video, target);
    auto b = d->forward(video.index_select(1, perm), target);
    CHECK(torch::equal(b, a.index_select(1, perm)));
  }
}

TEST_CASE("spatial discriminator scores every frame") {
  torch::manual_seed(1);
  ModelConfig cfg;
  SpatialDiscriminator d(cfg);
  TargetImage target(torch::zeros({1, 32, 32}));
  for (int t : {1, 3, 8}) {
    auto s = spatial_score(Video(torch::zeros({t, 1, 32, 32})), target, d);
    CHECK(s.logits.numel() == t);
  }
  CHECK_THROWS_AS(spatial_score(Video(torch::zeros({2, 1, 16, 16})), target, d), ArgumentError);
}

TEST_CASE("zero parameters give zero logits") {
  ModelConfig cfg;
  SpatialDiscriminator s(cfg);
  TemporalDiscriminator t(cfg);
  dyntx::testing::zero_parameters(*s);
  dyntx::testing::zero_parameters(*t);
  Video v(torch::rand({4, 1, 32, 32}) * 2 - 1);
  TargetImage target(torch::rand({1, 32, 32}) * 2 - 1);
  CHECK(spatial_score(v, target, s).logits.abs().max().item<double>() == 0);
  CHECK(temporal_score(v, t).logit == 0);
}

TEST_CASE("temporal discriminator scores any length of at least two") {
  torch::manual_seed(2);
  ModelConfig cfg;
  TemporalDiscriminator d(cfg);
  for (int t : {2, 7, 100}) {
    Video v(torch::rand({t, 1, 32, 32}) * 2 - 1);
    auto a = temporal_score(v, d);
    auto b = temporal_score(v, d);
    CHECK(std::isfinite(a.logit));
    CHECK(a.logit == b.logit);
  }
  CHECK_THROWS_AS(temporal_score(Video(torch::zeros({1, 1, 32, 32})), d), ArgumentError);
}

TEST_CASE("temporal discriminator is sensitive to frame order") {
  torch::manual_seed(3);
  ModelConfig cfg;
  TemporalDiscriminator d(cfg);
  auto frames = torch::rand({6, 1, 32, 32}) * 2 - 1;
  auto a = temporal_score(Video(frames), d);
  auto b = temporal_score(Video(frames.flip(0).contiguous()), d);
  CHECK(a.logit != b.logit);
}

}  // TEST_SUITE
