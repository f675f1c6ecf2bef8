#pragma once

// Test files include doctest.h after every torch header: c10 defines CHECK too.

#include <filesystem>
#include <random>
#include <string>

#include <torch/torch.h>

#include "dyntx/config.hpp"
#include "dyntx/data.hpp"

namespace dyntx::testing {

/// 1×8×8 frames, two levels, a few channels per layer.
inline ModelConfig tiny_model() {
  ModelConfig c;
  c.channels = 1;
  c.height = 8;
  c.width = 8;
  c.stem_channels = 2;
  c.widths = {3, 4};
  c.dyn_channels = 3;
  c.hidden_channels = 3;
  c.disc_widths = {2, 3};
  return c;
}

/// A small trainable config at 16×16 for fast loop tests.
inline TrainingConfig small_training(std::int64_t steps = 10) {
  TrainingConfig t;
  t.model.height = 16;
  t.model.width = 16;
  t.model.stem_channels = 4;
  t.model.widths = {4, 8};
  t.model.dyn_channels = 8;
  t.model.hidden_channels = 8;
  t.model.disc_widths = {4, 8};
  t.batch_size = 2;
  t.total_steps = steps;
  t.checkpoint_every = 5;
  return t;
}

/// Random scene on an H×W canvas with `frames` frames.
inline SceneSpec random_scene(std::int64_t seed, int size = 32, int frames = 8) {
  SceneSpec s;
  s.height = size;
  s.width = size;
  s.num_frames = frames;
  s.seed = seed;
  Randomization r;
  if (size < 32) {
    r.radius = {size / 8.0, size / 5.0};
    r.orbit_radius = {1, 2};
    r.amplitude = {1, 2};
    r.speed = {0.2, 0.5};
  }
  s.randomize = r;
  return s;
}

inline std::vector<LabeledVideo> random_corpus(int n, std::int64_t seed, int size = 32, int frames = 8) {
  std::vector<LabeledVideo> out;
  for (int i = 0; i < n; ++i) out.push_back(make_moving_shapes(random_scene(seed + i, size, frames)));
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dyntx_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void zero_parameters(torch::nn::Module& m) {
  torch::NoGradGuard g;
  for (auto& p : m.parameters()) p.zero_();
}

inline bool bit_equal(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes() == b.sizes() && a.scalar_type() == b.scalar_type() && torch::equal(a, b);
}

}  // namespace dyntx::testing
