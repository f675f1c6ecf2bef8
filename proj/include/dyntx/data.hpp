#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"

namespace dyntx {

/// T×C×H×W frames with values in [-1, 1]. Construction validates the
/// range and finiteness invariants; the tensor is never mutated afterwards.
class Video {
 public:
  explicit Video(torch::Tensor frames, int fps = 8);

  const torch::Tensor& frames() const { return frames_; }
  torch::Tensor frame(std::int64_t t) const { return frames_[t]; }
  std::int64_t num_frames() const { return frames_.size(0); }
  std::int64_t channels() const { return frames_.size(1); }
  std::int64_t height() const { return frames_.size(2); }
  std::int64_t width() const { return frames_.size(3); }
  int fps() const { return fps_; }

 private:
  torch::Tensor frames_;
  int fps_;
};

/// C×H×W image in [-1, 1] that donates appearance.
class TargetImage {
 public:
  explicit TargetImage(torch::Tensor pixels);

  const torch::Tensor& pixels() const { return pixels_; }
  std::int64_t channels() const { return pixels_.size(0); }
  std::int64_t height() const { return pixels_.size(1); }
  std::int64_t width() const { return pixels_.size(2); }

 private:
  torch::Tensor pixels_;
};

/// Continuous pixel coordinates: pixel (row i, col j) covers [j, j+1) × [i, i+1).
struct Vec2 {
  double x = 0;
  double y = 0;
  bool operator==(const Vec2&) const = default;
};

enum class ShapeKind { Disc, Square, Triangle };
enum class MotionKind { Linear, Circular, Sinusoidal };

/// radius: disc radius, square half-side, triangle circumradius.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Disc;
  double radius = 4;
  double fill = 0.8;
  bool operator==(const ShapeSpec&) const = default;
};

/// Every motion starts at `start` (displacement zero at t = 0).
///   linear:     start + velocity·t
///   circular:   orbit of `orbit_radius` with angular_speed rad/frame, entered at `phase`
///   sinusoidal: start + velocity·t + amplitude·sin(angular_speed·t)·axis
struct MotionSpec {
  MotionKind kind = MotionKind::Linear;
  Vec2 start{16, 16};
  Vec2 velocity{0, 0};
  double orbit_radius = 0;
  double angular_speed = 0;
  double phase = 0;
  double amplitude = 0;
  Vec2 axis{0, 1};
  bool operator==(const MotionSpec&) const = default;
};

struct Range {
  double lo = 0;
  double hi = 0;
  bool operator==(const Range&) const = default;
};

/// Fields drawn from the scene seed. Motions start at the canvas centre
/// offset by a uniform jitter of ±start_jitter px.
struct Randomization {
  int num_shapes = 1;
  std::vector<ShapeKind> shape_kinds{ShapeKind::Disc, ShapeKind::Square, ShapeKind::Triangle};
  Range radius{4, 6};
  Range fill{0.2, 0.9};
  Range background{-0.9, -0.4};
  std::vector<MotionKind> motion_kinds{MotionKind::Linear, MotionKind::Circular,
                                       MotionKind::Sinusoidal};
  Range speed{0.5, 1.3};
  Range orbit_radius{3, 6};
  Range angular_speed{0.3, 0.8};
  Range amplitude{2, 5};
  Range frequency{0.5, 1.2};
  double start_jitter = 0;
  bool operator==(const Randomization&) const = default;
};

struct SceneSpec {
  int height = 32;
  int width = 32;
  int channels = 1;
  int num_frames = 8;
  int fps = 8;
  double background = -0.6;
  std::int64_t seed = 0;
  std::vector<ShapeSpec> shapes;
  std::vector<MotionSpec> motions;
  std::optional<Randomization> randomize;

  bool operator==(const SceneSpec&) const = default;
};

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);
SceneSpec load_scene_spec(const std::filesystem::path& path);

/// Draws every randomized field from `spec.seed` and returns a spec with
/// `randomize` cleared. Specs without randomization are returned unchanged.
SceneSpec resolve_scene(const SceneSpec& spec);

/// Shape centroids per frame: centroids[t][shape].
struct Trajectory {
  std::vector<std::vector<Vec2>> centroids;

  std::size_t num_frames() const { return centroids.size(); }
  bool operator==(const Trajectory&) const = default;
};

void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

struct LabeledVideo {
  Video video;
  Trajectory trajectory;
  SceneSpec spec;  // resolved
};

/// Analytic centroids of every shape, clamped to stay `radius` away from
/// the canvas edge.
Trajectory scene_trajectory(const SceneSpec& resolved);

/// Renders the scene with 4×4 supersampled coverage. Pure in `spec`.
LabeledVideo make_moving_shapes(const SceneSpec& spec);

/// Coverage in [0, 1] of one shape centred at `centre` on an H×W canvas.
torch::Tensor shape_coverage(const ShapeSpec& shape, Vec2 centre, int height, int width);

/// Frame directory: frame_000000.png ... plus optional meta.json.
Video load_video_dir(const std::filesystem::path& dir);
void save_video_dir(const Video& video, const std::filesystem::path& dir);

/// Maps [-1, 1] to 8-bit with round((x+1)·127.5) clamped to [0, 255].
std::uint8_t to_pixel(double x);
double from_pixel(std::uint8_t p);

/// Corpus directory: scene_000000/ ... each holding a frame directory,
/// scene.json (resolved spec) and trajectory.json.
void save_labeled_video(const LabeledVideo& item, const std::filesystem::path& dir);
LabeledVideo load_labeled_video(const std::filesystem::path& dir);
std::vector<LabeledVideo> load_corpus(const std::filesystem::path& dir);

/// SHA-256 (hex) over every item's resolved spec and 8-bit quantized frames.
std::string corpus_hash(std::span<const LabeledVideo> corpus);

enum class PairMode { Self, Cross };

struct TransferPair {
  Video source;
  TargetImage target;
  PairMode mode;
  std::optional<Video> gt_video;             // self mode only
  std::optional<Trajectory> gt_trajectory;  // trajectory of the source
  std::size_t source_index = 0;
  std::size_t target_index = 0;
};

/// Deterministic in `rng_seed`. Cross pairs draw the ordered (source,
/// target) pair uniformly among distinct items.
TransferPair sample_pair(std::span<const LabeledVideo> corpus, PairMode mode,
                         std::uint64_t rng_seed);

/// Builds the cross pair (source item i, target = frame 0 of item j).
TransferPair make_pair(std::span<const LabeledVideo> corpus, std::size_t source,
                       std::size_t target);

}  // namespace dyntx
