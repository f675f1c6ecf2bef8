#include "dyntx/errors.hpp"
#include "dyntx/generator.hpp"
#include "support/fixtures.hpp"
#include "doctest.h"

using namespace dyntx;
using dyntx::testing::bit_equal;

namespace {

TargetImage random_target(int size = 32) { return TargetImage(torch::rand({1, size, size}) * 2 - 1); }

DynamicsCodeSeq random_codes(const ModelConfig& cfg, std::int64_t t) {
  DynamicsCodeSeq c;
  c.codes = torch::randn({1, t, cfg.dyn_channels, cfg.bottleneck_height(), cfg.bottleneck_width()});
  return c;
}

}  // namespace

TEST_SUITE("generator") {

TEST_CASE("init_state is deterministic and starts at t = 0") {
  torch::manual_seed(0);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto app = encode_appearance(random_target(), net->appearance_encoder);
  auto a = init_state(app, net);
  auto b = init_state(app, net);
  CHECK(a.t == 0);
  CHECK(bit_equal(a.hidden, b.hidden));
  CHECK(a.hidden.sizes() == torch::IntArrayRef({1, cfg.hidden_channels, 4, 4}));
}

TEST_CASE("zero parameters give a zero initial state") {
  ModelConfig cfg;
  GeneratorNet net(cfg);
  dyntx::testing::zero_parameters(*net);
  auto app = encode_appearance(random_target(), net->appearance_encoder);
  CHECK(init_state(app, net).hidden.abs().max().item<double>() == 0);
}

TEST_CASE("step emits a bounded frame and advances t") {
  torch::manual_seed(1);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto app = encode_appearance(random_target(), net->appearance_encoder);
  auto codes = random_codes(cfg, 3);
  auto s = init_state(app, net);
  auto r1 = step(s, codes.at(0), app, net);
  auto r2 = step(s, codes.at(0), app, net);
  CHECK(r1.next.t == 1);
  CHECK(bit_equal(r1.frame, r2.frame));
  CHECK(r1.frame.sizes() == torch::IntArrayRef({1, 1, 32, 32}));
  CHECK(r1.frame.abs().max().item<double>() <= 1);
}

TEST_CASE("frames depend only on appearance and hidden state") {
  torch::manual_seed(2);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  // A closed update gate keeps the hidden state, so every frame repeats.
  {
    torch::NoGradGuard g;
    for (auto& p : net->core->named_parameters())
      if (p.key() == "gates.bias") p.value().narrow(0, 0, cfg.hidden_channels).fill_(-1e4);
  }
  auto video = generate(random_target(), random_codes(cfg, 4), net, 0).video;
  CHECK(torch::equal(video.frame(2), video.frame(3)));
  CHECK(torch::equal(video.frame(0), video.frame(3)));
}

TEST_CASE("a zero code converges to a fixed point") {
  torch::manual_seed(3);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto target = random_target();
  auto app = encode_appearance(target, net->appearance_encoder);
  auto zero = torch::zeros({1, cfg.dyn_channels, 4, 4});
  torch::NoGradGuard g;
  auto s = init_state(app, net);
  for (int k = 0; k < 300; ++k) s = step(s, zero, app, net).next;
  auto f2 = step(s, zero, app, net);
  auto f3 = step(f2.next, zero, app, net);
  CHECK(torch::allclose(f2.frame, f3.frame, 0, 1e-5));
}

TEST_CASE("generate returns exactly T frames") {
  torch::manual_seed(3);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto target = random_target();
  for (int t : {1, 2, 7, 100}) {
    auto out = generate(target, random_codes(cfg, t), net, 0);
    CHECK(out.video.num_frames() == t);
    CHECK(out.video.channels() == 1);
  }
}

TEST_CASE("streaming generation matches the batched training path") {
  torch::manual_seed(4);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto target = random_target();
  auto codes = random_codes(cfg, 6);
  auto streamed = generate(target, codes, net, 0).video.frames();
  torch::Tensor batched;
  {
    torch::NoGradGuard g;
    batched = net->forward(target.pixels().unsqueeze(0), codes)[0];
  }
  CHECK(torch::allclose(streamed, batched, 0, 1e-5));
}

TEST_CASE("generation is deterministic and records provenance") {
  torch::manual_seed(5);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto target = random_target();
  auto codes = random_codes(cfg, 5);
  Provenance p{"src", "tgt", EncodingVariant::Raw, 42, 9};
  auto a = generate(target, codes, net, 9, p, 12);
  auto b = generate(target, codes, net, 9, p, 12);
  CHECK(torch::equal(a.video.frames(), b.video.frames()));
  CHECK(a.provenance.source_id == "src");
  CHECK(a.provenance.checkpoint_step == 42);
  CHECK(a.video.fps() == 12);
}

TEST_CASE("noise channels are seeded") {
  torch::manual_seed(6);
  ModelConfig cfg;
  cfg.noise_channels = 2;
  GeneratorNet net(cfg);
  auto target = random_target();
  auto codes = random_codes(cfg, 4);
  auto a = generate(target, codes, net, 1).video.frames();
  auto b = generate(target, codes, net, 1).video.frames();
  auto c = generate(target, codes, net, 2).video.frames();
  CHECK(torch::equal(a, b));
  CHECK_FALSE(torch::equal(a, c));
}

TEST_CASE("a non-finite frame raises a numerical error with the frame index") {
  torch::manual_seed(7);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  auto app = encode_appearance(random_target(), net->appearance_encoder);
  auto s = init_state(app, net);
  auto codes = random_codes(cfg, 2);
  codes.codes[0][1].fill_(std::numeric_limits<float>::quiet_NaN());
  auto r = step(s, codes.at(0), app, net);
  try {
    step(r.next, codes.at(1), app, net);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("code and appearance shapes are validated") {
  torch::manual_seed(8);
  ModelConfig cfg;
  GeneratorNet net(cfg);
  DynamicsCodeSeq bad;
  bad.codes = torch::zeros({1, 3, cfg.dyn_channels + 1, 4, 4});
  CHECK_THROWS_AS(generate(random_target(), bad, net, 0), ArgumentError);
}

}  // TEST_SUITE
