#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "dyntx/data.hpp"
#include "dyntx/errors.hpp"
#include "dyntx/png_io.hpp"
#include "support/fixtures.hpp"
#include "doctest.h"

using namespace dyntx;
using dyntx::testing::temp_dir;
namespace fs = std::filesystem;

namespace {

// Intensity-weighted centroid of |frame − bg|, pixel (i, j) centred at (j + .5, i + .5).
Vec2 raster_centroid(const torch::Tensor& frame, double bg) {
  auto f = frame.to(torch::kFloat64).mean(0);
  auto a = f.accessor<double, 2>();
  double m = 0, sx = 0, sy = 0;
  for (int i = 0; i < f.size(0); ++i)
    for (int j = 0; j < f.size(1); ++j) {
      const double w = std::abs(a[i][j] - bg);
      m += w;
      sx += w * (j + 0.5);
      sy += w * (i + 0.5);
    }
  return {sx / m, sy / m};
}

SceneSpec single_shape(ShapeKind kind, double r, MotionSpec motion, int frames = 8) {
  SceneSpec s;
  s.num_frames = frames;
  s.background = -0.6;
  s.shapes = {ShapeSpec{kind, r, 0.8}};
  s.motions = {motion};
  return s;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("zero velocity gives identical frames and a constant trajectory") {
  MotionSpec m;
  m.start = {16, 16};
  auto item = make_moving_shapes(single_shape(ShapeKind::Disc, 5, m));
  for (std::int64_t t = 1; t < item.video.num_frames(); ++t) {
    CHECK(torch::equal(item.video.frame(t), item.video.frame(0)));
    CHECK(item.trajectory.centroids[t][0] == item.trajectory.centroids[0][0]);
  }
}

TEST_CASE("linear motion matches kinematics and the rasterized centroid") {
  MotionSpec m;
  m.start = {4, 16};
  m.velocity = {1, 0};
  auto item = make_moving_shapes(single_shape(ShapeKind::Disc, 3, m));
  REQUIRE(item.trajectory.num_frames() == 8);
  for (int t = 0; t < 8; ++t) {
    const Vec2 c = item.trajectory.centroids[t][0];
    CHECK(c.x == doctest::Approx(4 + t));
    CHECK(c.y == doctest::Approx(16));
    const Vec2 r = raster_centroid(item.video.frame(t), -0.6);
    CHECK(std::abs(r.x - c.x) < 0.5);
    CHECK(std::abs(r.y - c.y) < 0.5);
  }
}

TEST_CASE("property: rasterized centroid stays within half a pixel of the trajectory") {
  for (int seed = 0; seed < 30; ++seed) {
    auto spec = dyntx::testing::random_scene(seed);
    auto item = make_moving_shapes(spec);
    const auto& kind = item.spec.shapes[0].kind;
    CAPTURE(seed);
    CAPTURE(static_cast<int>(kind));
    for (std::size_t t = 0; t < item.trajectory.num_frames(); ++t) {
      const Vec2 c = item.trajectory.centroids[t][0];
      const Vec2 r = raster_centroid(item.video.frame(t), item.spec.background);
      CHECK(std::hypot(r.x - c.x, r.y - c.y) < 0.5);
    }
  }
}

TEST_CASE("generation is a pure function of the scene spec") {
  auto spec = dyntx::testing::random_scene(7);
  auto a = make_moving_shapes(spec);
  auto b = make_moving_shapes(spec);
  CHECK(torch::equal(a.video.frames(), b.video.frames()));
  CHECK(a.trajectory == b.trajectory);
  CHECK(a.spec == b.spec);
  auto c = make_moving_shapes(dyntx::testing::random_scene(8));
  CHECK_FALSE(torch::equal(a.video.frames(), c.video.frames()));
}

TEST_CASE("frames and trajectories have num_frames entries and stay in range") {
  for (int frames : {1, 2, 8, 20}) {
    auto item = make_moving_shapes(dyntx::testing::random_scene(3, 32, frames));
    CHECK(item.video.num_frames() == frames);
    CHECK(item.trajectory.num_frames() == static_cast<std::size_t>(frames));
    CHECK(item.video.frames().min().item<double>() >= -1);
    CHECK(item.video.frames().max().item<double>() <= 1);
  }
}

TEST_CASE("a shape larger than the canvas is rejected") {
  MotionSpec m;
  SceneSpec s = single_shape(ShapeKind::Disc, 20, m);
  CHECK_THROWS_AS(make_moving_shapes(s), ConfigError);
}

TEST_CASE("scene spec JSON round-trips") {
  for (int seed = 0; seed < 5; ++seed) {
    auto spec = dyntx::testing::random_scene(seed);
    nlohmann::json j = spec;
    CHECK(j.get<SceneSpec>() == spec);
    auto resolved = resolve_scene(spec);
    nlohmann::json k = resolved;
    CHECK(k.get<SceneSpec>() == resolved);
  }
}

TEST_CASE("pixel mapping endpoints") {
  CHECK(to_pixel(-1.0) == 0);
  CHECK(to_pixel(1.0) == 255);
  CHECK(to_pixel(0.0) == 128);
  CHECK(from_pixel(0) == -1.0);
  CHECK(from_pixel(255) == 1.0);
  for (int p = 0; p < 256; ++p) CHECK(to_pixel(from_pixel(static_cast<std::uint8_t>(p))) == p);
}

TEST_CASE("uniform 128 frames load as 128/127.5 - 1") {
  auto dir = temp_dir("uniform128");
  for (int t = 0; t < 3; ++t) {
    Image8 img(4, 5, 1);
    std::fill(img.data.begin(), img.data.end(), 128);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.png", t);
    write_png((dir / name).string(), img);
  }
  auto v = load_video_dir(dir);
  CHECK(v.num_frames() == 3);
  CHECK(v.height() == 4);
  CHECK(v.width() == 5);
  CHECK(v.frames().min().item<double>() == doctest::Approx(0.00392157).epsilon(1e-5));
  CHECK(v.frames().max().item<double>() == doctest::Approx(0.00392157).epsilon(1e-5));
}

TEST_CASE("a single black frame loads as one frame of -1") {
  auto dir = temp_dir("black");
  Image8 img(6, 6, 1);
  write_png((dir / "frame_000000.png").string(), img);
  auto v = load_video_dir(dir);
  CHECK(v.num_frames() == 1);
  CHECK(v.frames().eq(-1).all().item<bool>());
}

TEST_CASE("save then load is lossless at 8-bit granularity") {
  auto item = make_moving_shapes(dyntx::testing::random_scene(11));
  auto dir = temp_dir("roundtrip");
  save_video_dir(item.video, dir / "a");
  auto once = load_video_dir(dir / "a");
  // Quantisation error bounded by half a level.
  CHECK((once.frames() - item.video.frames()).abs().max().item<double>() <= 1.0 / 255 + 1e-6);
  save_video_dir(once, dir / "b");
  auto twice = load_video_dir(dir / "b");
  CHECK(torch::equal(once.frames(), twice.frames()));
  for (int t = 0; t < 8; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.png", t);
    auto a = read_png((dir / "a" / name).string());
    auto b = read_png((dir / "b" / name).string());
    CHECK(a.data == b.data);
  }
}

TEST_CASE("a numbering gap is a format error") {
  auto dir = temp_dir("gap");
  Image8 img(4, 4, 1);
  write_png((dir / "frame_000000.png").string(), img);
  write_png((dir / "frame_000002.png").string(), img);
  CHECK_THROWS_AS(load_video_dir(dir), FormatError);
}

TEST_CASE("mixed frame dimensions are a format error") {
  auto dir = temp_dir("mixed");
  write_png((dir / "frame_000000.png").string(), Image8(4, 4, 1));
  write_png((dir / "frame_000001.png").string(), Image8(4, 5, 1));
  CHECK_THROWS_AS(load_video_dir(dir), FormatError);
}

TEST_CASE("an empty or missing directory is not found") {
  auto dir = temp_dir("empty");
  CHECK_THROWS_AS(load_video_dir(dir), NotFoundError);
  CHECK_THROWS_AS(load_video_dir(dir / "nope"), NotFoundError);
}

TEST_CASE("saving under a regular file is an IO error") {
  auto dir = temp_dir("unwritable");
  std::ofstream(dir / "file") << "x";
  auto item = make_moving_shapes(dyntx::testing::random_scene(1));
  CHECK_THROWS_AS(save_video_dir(item.video, dir / "file" / "sub"), IoError);
}

TEST_CASE("video values outside [-1, 1] are rejected") {
  CHECK_THROWS_AS(Video(torch::full({2, 1, 4, 4}, 1.5)), ArgumentError);
  CHECK_THROWS_AS(Video(torch::zeros({1, 4, 4})), ArgumentError);
}

TEST_CASE("labeled videos and corpora round-trip through disk") {
  auto corpus = dyntx::testing::random_corpus(3, 20);
  auto dir = temp_dir("corpus");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%06zu", i);
    save_labeled_video(corpus[i], dir / name);
  }
  auto loaded = load_corpus(dir);
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].spec == corpus[i].spec);
    CHECK(loaded[i].trajectory.num_frames() == corpus[i].trajectory.num_frames());
  }
  CHECK(corpus_hash(loaded) == corpus_hash(loaded));
  auto other = dyntx::testing::random_corpus(3, 21);
  CHECK(corpus_hash(other) != corpus_hash(loaded));
}

TEST_CASE("self pairs use the source's own first frame") {
  auto corpus = dyntx::testing::random_corpus(5, 40);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = sample_pair(corpus, PairMode::Self, seed);
    CHECK(p.mode == PairMode::Self);
    CHECK(p.source_index == p.target_index);
    CHECK(torch::equal(p.target.pixels(), p.source.frame(0)));
    REQUIRE(p.gt_video.has_value());
    CHECK(torch::equal(p.gt_video->frames(), p.source.frames()));
  }
}

TEST_CASE("cross pairs are deterministic, distinct and uniform over targets") {
  auto corpus = dyntx::testing::random_corpus(5, 50);
  auto a = sample_pair(corpus, PairMode::Cross, 123);
  auto b = sample_pair(corpus, PairMode::Cross, 123);
  CHECK(a.source_index == b.source_index);
  CHECK(a.target_index == b.target_index);
  CHECK_FALSE(a.gt_video.has_value());

  std::map<std::size_t, int> sources, targets;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    auto p = sample_pair(corpus, PairMode::Cross, 1000 + k);
    CHECK(p.source_index != p.target_index);
    ++sources[p.source_index];
    ++targets[p.target_index];
    seen.insert({p.source_index, p.target_index});
  }
  // Expected 2000 per item (binomial sd ~40), so ±10% is a 5-sigma band.
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(sources[i] - 2000) <= 200);
    CHECK(std::abs(targets[i] - 2000) <= 200);
  }
  CHECK(seen.size() == 20);
}

TEST_CASE("cross pairs need at least two items") {
  auto corpus = dyntx::testing::random_corpus(1, 60);
  CHECK_THROWS_AS(sample_pair(corpus, PairMode::Cross, 0), ConfigError);
}

}  // TEST_SUITE
