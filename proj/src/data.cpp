#include "dyntx/data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <regex>

#include "dyntx/errors.hpp"
#include "dyntx/png_io.hpp"

namespace dyntx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_pixels(const torch::Tensor& t, const char* what) {
  if (!t.defined()) throw ArgumentError(std::string(what) + ": undefined tensor");
  if (!t.is_floating_point()) throw ArgumentError(std::string(what) + ": expected a floating tensor");
  if (t.numel() == 0) throw ArgumentError(std::string(what) + ": empty tensor");
  if (!torch::isfinite(t).all().item<bool>())
    throw ArgumentError(std::string(what) + ": non-finite values");
  if (t.min().item<double>() < -1.0 || t.max().item<double>() > 1.0)
    throw ArgumentError(std::string(what) + ": values outside [-1, 1]");
}

}  // namespace

Video::Video(torch::Tensor frames, int fps) : frames_(frames.contiguous()), fps_(fps) {
  if (frames_.dim() != 4) throw ArgumentError("Video: expected a T×C×H×W tensor");
  if (fps_ < 1) throw ArgumentError("Video: fps must be positive");
  check_pixels(frames_, "Video");
}

TargetImage::TargetImage(torch::Tensor pixels) : pixels_(pixels.contiguous()) {
  if (pixels_.dim() != 3) throw ArgumentError("TargetImage: expected a C×H×W tensor");
  check_pixels(pixels_, "TargetImage");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const std::map<std::string, ShapeKind> kShapeNames{
    {"disc", ShapeKind::Disc}, {"square", ShapeKind::Square}, {"triangle", ShapeKind::Triangle}};
const std::map<std::string, MotionKind> kMotionNames{{"linear", MotionKind::Linear},
                                                     {"circular", MotionKind::Circular},
                                                     {"sinusoidal", MotionKind::Sinusoidal}};

template <typename E>
std::string name_of(const std::map<std::string, E>& names, E v) {
  for (const auto& [k, e] : names)
    if (e == v) return k;
  return "?";
}

template <typename E>
E parse_name(const std::map<std::string, E>& names, const json& j, const char* what) {
  if (!j.is_string()) throw FormatError(std::string(what) + ": expected a string");
  auto it = names.find(j.get<std::string>());
  if (it == names.end())
    throw FormatError(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return it->second;
}

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError(std::string(what) + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json range_json(Range r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const char* what) {
  Vec2 v = vec_from(j, what);
  if (v.x > v.y) throw FormatError(std::string(what) + ": empty range");
  return {v.x, v.y};
}

template <typename T>
T num(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw FormatError(std::string("'") + key + "' must be a number");
  return it->get<T>();
}

json motion_json(const MotionSpec& m) {
  json j{{"kind", name_of(kMotionNames, m.kind)}, {"start", vec_json(m.start)}};
  switch (m.kind) {
    case MotionKind::Linear:
      j["velocity"] = vec_json(m.velocity);
      break;
    case MotionKind::Circular:
      j["orbit_radius"] = m.orbit_radius;
      j["angular_speed"] = m.angular_speed;
      j["phase"] = m.phase;
      break;
    case MotionKind::Sinusoidal:
      j["velocity"] = vec_json(m.velocity);
      j["amplitude"] = m.amplitude;
      j["angular_speed"] = m.angular_speed;
      j["axis"] = vec_json(m.axis);
      break;
  }
  return j;
}

MotionSpec motion_from(const json& j) {
  MotionSpec m;
  m.kind = parse_name(kMotionNames, j.at("kind"), "motion kind");
  if (j.contains("start")) m.start = vec_from(j["start"], "motion.start");
  if (j.contains("velocity")) m.velocity = vec_from(j["velocity"], "motion.velocity");
  if (j.contains("axis")) m.axis = vec_from(j["axis"], "motion.axis");
  m.orbit_radius = num(j, "orbit_radius", m.orbit_radius);
  m.angular_speed = num(j, "angular_speed", m.angular_speed);
  m.phase = num(j, "phase", m.phase);
  m.amplitude = num(j, "amplitude", m.amplitude);
  return m;
}

json randomize_json(const Randomization& r) {
  json kinds = json::array(), motions = json::array();
  for (auto k : r.shape_kinds) kinds.push_back(name_of(kShapeNames, k));
  for (auto k : r.motion_kinds) motions.push_back(name_of(kMotionNames, k));
  return json{{"num_shapes", r.num_shapes},
              {"shape_kinds", kinds},
              {"radius", range_json(r.radius)},
              {"fill", range_json(r.fill)},
              {"background", range_json(r.background)},
              {"motion_kinds", motions},
              {"speed", range_json(r.speed)},
              {"orbit_radius", range_json(r.orbit_radius)},
              {"angular_speed", range_json(r.angular_speed)},
              {"amplitude", range_json(r.amplitude)},
              {"frequency", range_json(r.frequency)},
              {"start_jitter", r.start_jitter}};
}

Randomization randomize_from(const json& j) {
  Randomization r;
  r.num_shapes = num(j, "num_shapes", r.num_shapes);
  if (j.contains("shape_kinds")) {
    r.shape_kinds.clear();
    for (const auto& k : j["shape_kinds"]) r.shape_kinds.push_back(parse_name(kShapeNames, k, "shape kind"));
  }
  if (j.contains("motion_kinds")) {
    r.motion_kinds.clear();
    for (const auto& k : j["motion_kinds"]) r.motion_kinds.push_back(parse_name(kMotionNames, k, "motion kind"));
  }
  auto rng = [&](const char* key, Range& out) {
    if (j.contains(key)) out = range_from(j[key], key);
  };
  rng("radius", r.radius);
  rng("fill", r.fill);
  rng("background", r.background);
  rng("speed", r.speed);
  rng("orbit_radius", r.orbit_radius);
  rng("angular_speed", r.angular_speed);
  rng("amplitude", r.amplitude);
  rng("frequency", r.frequency);
  r.start_jitter = num(j, "start_jitter", r.start_jitter);
  if (r.num_shapes < 1 || r.shape_kinds.empty() || r.motion_kinds.empty())
    throw FormatError("randomize: need at least one shape and one shape/motion kind");
  return r;
}

}  // namespace

void to_json(json& j, const SceneSpec& s) {
  json shapes = json::array(), motions = json::array();
  for (const auto& sh : s.shapes)
    shapes.push_back({{"kind", name_of(kShapeNames, sh.kind)}, {"radius", sh.radius}, {"fill", sh.fill}});
  for (const auto& m : s.motions) motions.push_back(motion_json(m));
  j = json{{"canvas", {{"height", s.height}, {"width", s.width}}},
           {"channels", s.channels},
           {"num_frames", s.num_frames},
           {"fps", s.fps},
           {"background", s.background},
           {"seed", s.seed},
           {"shapes", shapes},
           {"motions", motions}};
  if (s.randomize) j["randomize"] = randomize_json(*s.randomize);
}

void from_json(const json& j, SceneSpec& s) {
  try {
    s = SceneSpec{};
    if (j.contains("canvas")) {
      s.height = j["canvas"].at("height").get<int>();
      s.width = j["canvas"].at("width").get<int>();
    }
    s.channels = num(j, "channels", s.channels);
    s.num_frames = num(j, "num_frames", s.num_frames);
    s.fps = num(j, "fps", s.fps);
    s.background = num(j, "background", s.background);
    s.seed = num(j, "seed", s.seed);
    if (j.contains("shapes")) {
      for (const auto& sh : j["shapes"]) {
        ShapeSpec shape;
        shape.kind = parse_name(kShapeNames, sh.at("kind"), "shape kind");
        shape.radius = num(sh, "radius", shape.radius);
        shape.fill = num(sh, "fill", shape.fill);
        s.shapes.push_back(shape);
      }
    }
    if (j.contains("motions"))
      for (const auto& m : j["motions"]) s.motions.push_back(motion_from(m));
    if (j.contains("randomize")) s.randomize = randomize_from(j["randomize"]);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid scene spec: ") + e.what());
  }
}

SceneSpec load_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open scene spec '" + path.string() + "'");
  try {
    return json::parse(in).get<SceneSpec>();
  } catch (const json::parse_error& e) {
    throw FormatError("scene spec '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void to_json(json& j, const Trajectory& t) {
  j = json::array();
  for (const auto& frame : t.centroids) {
    json row = json::array();
    for (const auto& c : frame) row.push_back(vec_json(c));
    j.push_back(row);
  }
}

void from_json(const json& j, Trajectory& t) {
  t.centroids.clear();
  for (const auto& row : j) {
    std::vector<Vec2> frame;
    for (const auto& c : row) frame.push_back(vec_from(c, "trajectory"));
    t.centroids.push_back(std::move(frame));
  }
}

// ---------------------------------------------------------------------------
// Scene synthesis

SceneSpec resolve_scene(const SceneSpec& spec) {
  if (!spec.randomize) return spec;
  const Randomization& r = *spec.randomize;
  std::mt19937_64 rng(static_cast<std::uint64_t>(spec.seed));
  auto uniform = [&](Range range) {
    return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
  };
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  auto sign = [&]() { return pick(2) == 0 ? -1.0 : 1.0; };
  constexpr double kTwoPi = 2 * std::numbers::pi;

  SceneSpec out = spec;
  out.randomize.reset();
  out.shapes.clear();
  out.motions.clear();
  out.background = uniform(r.background);
  const Vec2 centre{spec.width / 2.0, spec.height / 2.0};
  for (int k = 0; k < r.num_shapes; ++k) {
    ShapeSpec shape;
    shape.kind = r.shape_kinds[pick(r.shape_kinds.size())];
    shape.radius = uniform(r.radius);
    shape.fill = uniform(r.fill);
    out.shapes.push_back(shape);

    MotionSpec m;
    m.kind = r.motion_kinds[pick(r.motion_kinds.size())];
    m.start = centre;
    if (r.start_jitter > 0) {
      m.start.x += uniform({-r.start_jitter, r.start_jitter});
      m.start.y += uniform({-r.start_jitter, r.start_jitter});
    }
    switch (m.kind) {
      case MotionKind::Linear: {
        const double angle = uniform({0, kTwoPi});
        const double speed = uniform(r.speed);
        m.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
        break;
      }
      case MotionKind::Circular:
        m.orbit_radius = uniform(r.orbit_radius);
        m.angular_speed = sign() * uniform(r.angular_speed);
        m.phase = uniform({0, kTwoPi});
        break;
      case MotionKind::Sinusoidal: {
        const double angle = uniform({0, kTwoPi});
        m.axis = {std::cos(angle), std::sin(angle)};
        const double drift = uniform({-r.speed.hi, r.speed.hi});
        m.velocity = {-m.axis.y * drift, m.axis.x * drift};
        m.amplitude = uniform(r.amplitude);
        m.angular_speed = uniform(r.frequency);
        break;
      }
    }
    out.motions.push_back(m);
  }
  return out;
}

namespace {

void validate_resolved(const SceneSpec& s) {
  if (s.num_frames < 1) throw ConfigError("scene: num_frames must be >= 1");
  if (s.height < 1 || s.width < 1) throw ConfigError("scene: canvas must be non-empty");
  if (s.channels < 1 || s.channels > 4) throw ConfigError("scene: channels must be 1..4");
  if (s.fps < 1) throw ConfigError("scene: fps must be positive");
  if (s.shapes.size() != s.motions.size())
    throw ConfigError("scene: exactly one motion per shape is required");
  if (s.background < -1 || s.background > 1) throw ConfigError("scene: background outside [-1, 1]");
  for (const auto& sh : s.shapes) {
    if (sh.radius <= 0) throw ConfigError("scene: shape radius must be positive");
    if (2 * sh.radius > std::min(s.height, s.width))
      throw ConfigError("scene: canvas " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                        " too small for shape radius " + std::to_string(sh.radius));
    if (sh.fill < -1 || sh.fill > 1) throw ConfigError("scene: fill outside [-1, 1]");
  }
}

Vec2 motion_position(const MotionSpec& m, double t) {
  switch (m.kind) {
    case MotionKind::Linear:
      return {m.start.x + m.velocity.x * t, m.start.y + m.velocity.y * t};
    case MotionKind::Circular: {
      const double cx = m.start.x - m.orbit_radius * std::cos(m.phase);
      const double cy = m.start.y - m.orbit_radius * std::sin(m.phase);
      const double a = m.angular_speed * t + m.phase;
      return {cx + m.orbit_radius * std::cos(a), cy + m.orbit_radius * std::sin(a)};
    }
    case MotionKind::Sinusoidal: {
      const double norm = std::hypot(m.axis.x, m.axis.y);
      const Vec2 axis = norm > 0 ? Vec2{m.axis.x / norm, m.axis.y / norm} : Vec2{0, 1};
      const double s = m.amplitude * std::sin(m.angular_speed * t);
      return {m.start.x + m.velocity.x * t + s * axis.x, m.start.y + m.velocity.y * t + s * axis.y};
    }
  }
  return m.start;
}

bool inside(ShapeKind kind, double dx, double dy, double r) {
  switch (kind) {
    case ShapeKind::Disc:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::Square:
      return std::abs(dx) <= r && std::abs(dy) <= r;
    case ShapeKind::Triangle: {
      // Upward equilateral triangle, centroid at the origin.
      const double h = r * std::sqrt(3.0) / 2;
      const double vx[3] = {0, h, -h};
      const double vy[3] = {-r, r / 2, r / 2};
      for (int i = 0; i < 3; ++i) {
        const int k = (i + 1) % 3;
        if ((vx[k] - vx[i]) * (dy - vy[i]) - (vy[k] - vy[i]) * (dx - vx[i]) < 0) return false;
      }
      return true;
    }
  }
  return false;
}

constexpr int kSupersample = 4;

}  // namespace

Trajectory scene_trajectory(const SceneSpec& s) {
  Trajectory traj;
  traj.centroids.resize(static_cast<std::size_t>(s.num_frames));
  for (int t = 0; t < s.num_frames; ++t) {
    for (std::size_t k = 0; k < s.shapes.size(); ++k) {
      const double r = s.shapes[k].radius;
      Vec2 p = motion_position(s.motions[k], t);
      p.x = std::clamp(p.x, r, s.width - r);
      p.y = std::clamp(p.y, r, s.height - r);
      traj.centroids[t].push_back(p);
    }
  }
  return traj;
}

torch::Tensor shape_coverage(const ShapeSpec& shape, Vec2 centre, int height, int width) {
  auto cov = torch::zeros({height, width}, torch::kFloat64);
  auto a = cov.accessor<double, 2>();
  const double r = shape.radius;
  const int y0 = std::max(0, static_cast<int>(std::floor(centre.y - r)) - 1);
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(centre.y + r)) + 1);
  const int x0 = std::max(0, static_cast<int>(std::floor(centre.x - r)) - 1);
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(centre.x + r)) + 1);
  constexpr double inv = 1.0 / (kSupersample * kSupersample);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        const double py = y + (sy + 0.5) / kSupersample - centre.y;
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double px = x + (sx + 0.5) / kSupersample - centre.x;
          hits += inside(shape.kind, px, py, r);
        }
      }
      a[y][x] = hits * inv;
    }
  }
  return cov;
}

LabeledVideo make_moving_shapes(const SceneSpec& spec) {
  SceneSpec s = resolve_scene(spec);
  validate_resolved(s);
  Trajectory traj = scene_trajectory(s);
  auto frames = torch::full({s.num_frames, s.height, s.width}, s.background, torch::kFloat64);
  for (int t = 0; t < s.num_frames; ++t) {
    auto frame = frames[t];
    for (std::size_t k = 0; k < s.shapes.size(); ++k) {
      auto cov = shape_coverage(s.shapes[k], traj.centroids[t][k], s.height, s.width);
      frame.copy_(frame * (1 - cov) + cov * s.shapes[k].fill);
    }
  }
  frames = frames.clamp(-1, 1).to(torch::kFloat32).unsqueeze(1).expand({-1, s.channels, -1, -1});
  return LabeledVideo{Video(frames.contiguous(), s.fps), std::move(traj), std::move(s)};
}

// ---------------------------------------------------------------------------
// Frame directories

std::uint8_t to_pixel(double x) {
  const double p = std::round((x + 1.0) * 127.5);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

double from_pixel(std::uint8_t p) { return p / 127.5 - 1.0; }

namespace {

const std::regex kFramePattern(R"(frame_(\d+)\.png)");

std::string frame_name(std::int64_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06lld.png", static_cast<long long>(t));
  return buf;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

Video load_video_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFoundError("video directory '" + dir.string() + "' not found");
  std::map<long long, fs::path> frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, kFramePattern)) frames.emplace(std::stoll(m[1].str()), entry.path());
  }
  if (frames.empty()) throw NotFoundError("no frames in '" + dir.string() + "'");
  long long expected = 0;
  for (const auto& [index, path] : frames) {
    if (index != expected)
      throw FormatError("gap in frame numbering in '" + dir.string() + "': missing frame " +
                        std::to_string(expected));
    ++expected;
  }
  int fps = 8;
  if (fs::exists(dir / "meta.json")) {
    json meta = read_json_file(dir / "meta.json");
    if (meta.contains("fps")) fps = meta["fps"].get<int>();
  }

  std::vector<Image8> images;
  images.reserve(frames.size());
  for (const auto& [index, path] : frames) {
    images.push_back(read_png(path.string()));
    const auto& first = images.front();
    const auto& img = images.back();
    if (img.height != first.height || img.width != first.width || img.channels != first.channels)
      throw FormatError("frame " + std::to_string(index) + " in '" + dir.string() +
                        "' has different dimensions than frame 0");
  }
  const auto& f0 = images.front();
  auto out = torch::empty({static_cast<std::int64_t>(images.size()), f0.channels, f0.height, f0.width},
                          torch::kFloat32);
  auto a = out.accessor<float, 4>();
  for (std::size_t t = 0; t < images.size(); ++t)
    for (int y = 0; y < f0.height; ++y)
      for (int x = 0; x < f0.width; ++x)
        for (int c = 0; c < f0.channels; ++c)
          a[t][c][y][x] = static_cast<float>(from_pixel(images[t].at(y, x, c)));
  return Video(out, fps);
}

void save_video_dir(const Video& video, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, kFramePattern)) fs::remove(entry.path());
  }
  const auto frames = video.frames().to(torch::kFloat64).contiguous();
  auto a = frames.accessor<double, 4>();
  const int c = static_cast<int>(video.channels()), h = static_cast<int>(video.height()),
            w = static_cast<int>(video.width());
  for (std::int64_t t = 0; t < video.num_frames(); ++t) {
    Image8 img(h, w, c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int k = 0; k < c; ++k) img.at(y, x, k) = to_pixel(a[t][k][y][x]);
    write_png((dir / frame_name(t)).string(), img);
  }
  json meta{{"fps", video.fps()},
            {"num_frames", video.num_frames()},
            {"channels", video.channels()},
            {"height", video.height()},
            {"width", video.width()}};
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Corpus

void save_labeled_video(const LabeledVideo& item, const fs::path& dir) {
  save_video_dir(item.video, dir);
  write_text_file(dir / "scene.json", json(item.spec).dump(2) + "\n");
  write_text_file(dir / "trajectory.json", json(item.trajectory).dump() + "\n");
}

LabeledVideo load_labeled_video(const fs::path& dir) {
  Video video = load_video_dir(dir);
  SceneSpec spec = read_json_file(dir / "scene.json").get<SceneSpec>();
  Trajectory traj = read_json_file(dir / "trajectory.json").get<Trajectory>();
  if (static_cast<std::int64_t>(traj.num_frames()) != video.num_frames())
    throw FormatError("trajectory length does not match video in '" + dir.string() + "'");
  return LabeledVideo{std::move(video), std::move(traj), std::move(spec)};
}

std::vector<LabeledVideo> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFoundError("corpus directory '" + dir.string() + "' not found");
  std::vector<fs::path> scenes;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && entry.path().filename().string().starts_with("scene_"))
      scenes.push_back(entry.path());
  if (scenes.empty()) throw NotFoundError("corpus directory '" + dir.string() + "' holds no scenes");
  std::sort(scenes.begin(), scenes.end());
  std::vector<LabeledVideo> corpus;
  corpus.reserve(scenes.size());
  for (const auto& s : scenes) corpus.push_back(load_labeled_video(s));
  return corpus;
}

std::string corpus_hash(std::span<const LabeledVideo> corpus) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  for (const auto& item : corpus) {
    const std::string spec = json(item.spec).dump();
    EVP_DigestUpdate(ctx.get(), spec.data(), spec.size() + 1);
    const auto frames = item.video.frames().to(torch::kFloat64).contiguous();
    const double* p = frames.data_ptr<double>();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(frames.numel()));
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_pixel(p[i]);
    EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pairs

TransferPair make_pair(std::span<const LabeledVideo> corpus, std::size_t source, std::size_t target) {
  if (source >= corpus.size() || target >= corpus.size())
    throw ArgumentError("pair index out of range");
  const auto& src = corpus[source];
  TargetImage tgt(corpus[target].video.frame(0));
  if (source == target)
    return TransferPair{src.video, tgt, PairMode::Self, src.video, src.trajectory, source, target};
  return TransferPair{src.video, tgt, PairMode::Cross, std::nullopt, src.trajectory, source, target};
}

TransferPair sample_pair(std::span<const LabeledVideo> corpus, PairMode mode, std::uint64_t rng_seed) {
  if (corpus.empty()) throw ConfigError("sample_pair: empty corpus");
  if (mode == PairMode::Cross && corpus.size() < 2)
    throw ConfigError("sample_pair: cross pairs need at least two corpus items");
  std::mt19937_64 rng(rng_seed);
  const std::size_t n = corpus.size();
  const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  if (mode == PairMode::Self) return make_pair(corpus, i, i);
  std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
  if (j >= i) ++j;
  return make_pair(corpus, i, j);
}

}  // namespace dyntx
