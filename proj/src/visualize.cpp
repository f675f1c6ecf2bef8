#include "dyntx/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dyntx/errors.hpp"
#include "json.hpp"

namespace dyntx {

namespace fs = std::filesystem;

torch::Tensor heatmap_values(const DynamicsCodeSeq& codes) {
  if (codes.codes.dim() != 5 || codes.codes.size(0) != 1)
    throw ArgumentError("heatmaps: expected the codes of a single sequence");
  auto maps = codes.codes.squeeze(0).detach().to(torch::kFloat64).abs().mean(1);  // T×H_d×W_d
  const double max = maps.max().item<double>();
  if (max > 0) maps = maps / max;
  return maps;
}

std::array<std::uint8_t, 3> colormap(double v) {
  static constexpr double anchors[][3] = {
      {0.05, 0.03, 0.25}, {0.35, 0.05, 0.50}, {0.75, 0.15, 0.35}, {0.98, 0.50, 0.10}, {0.99, 0.95, 0.35}};
  constexpr int n = 5;
  v = std::clamp(v, 0.0, 1.0) * (n - 1);
  const int i = std::min(static_cast<int>(v), n - 2);
  const double f = v - i;
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<std::uint8_t>(std::lround(255.0 * (anchors[i][c] * (1 - f) + anchors[i + 1][c] * f)));
  return rgb;
}

HeatmapInfo render_dynamics_heatmaps(const DynamicsCodeSeq& codes, const fs::path& png_path, int scale) {
  if (scale < 1) throw ArgumentError("heatmap scale must be >= 1");
  const auto maps = heatmap_values(codes);
  HeatmapInfo info;
  info.tiles = static_cast<int>(maps.size(0));
  info.tile_height = static_cast<int>(maps.size(1)) * scale;
  info.tile_width = static_cast<int>(maps.size(2)) * scale;
  info.max_value = codes.codes.detach().to(torch::kFloat64).abs().mean(2).max().item<double>();
  info.degenerate = !(info.max_value > 0);

  const int width = info.tiles * info.tile_width + (info.tiles - 1) * info.gap;
  Image8 img(info.tile_height, width, 3, 255);
  auto a = maps.accessor<double, 3>();
  for (int t = 0; t < info.tiles; ++t) {
    const int x0 = t * (info.tile_width + info.gap);
    for (int y = 0; y < info.tile_height; ++y)
      for (int x = 0; x < info.tile_width; ++x) {
        const auto rgb = colormap(a[t][y / scale][x / scale]);
        for (int c = 0; c < 3; ++c) img.at(y, x0 + x, c) = rgb[c];
      }
  }
  if (png_path.has_parent_path()) fs::create_directories(png_path.parent_path());
  write_png(png_path.string(), img);

  nlohmann::json side{{"tiles", info.tiles},
                      {"tile_height", info.tile_height},
                      {"tile_width", info.tile_width},
                      {"gap", info.gap},
                      {"scale", scale},
                      {"normalization", {{"min", 0.0}, {"max", info.max_value}}},
                      {"degenerate", info.degenerate},
                      {"variant", std::string(to_string(codes.variant))},
                      {"ref_index", codes.ref_index}};
  fs::path sidecar = png_path;
  sidecar.replace_extension(".json");
  std::ofstream(sidecar) << side.dump(2) << '\n';
  return info;
}

GridLayout comparison_grid_layout(std::size_t sources, std::size_t targets, std::int64_t min_length,
                                  std::int64_t frame_height, std::int64_t frame_width, int max_strip, int pad) {
  GridLayout g;
  g.pad = pad;
  g.strip_frames = static_cast<int>(std::min<std::int64_t>(max_strip, min_length));
  const int strip_w = g.strip_frames * static_cast<int>(frame_width);
  g.width = pad + static_cast<int>(1 + targets) * (strip_w + pad);
  g.height = pad + static_cast<int>(1 + sources) * (static_cast<int>(frame_height) + pad);
  return g;
}

std::vector<std::int64_t> strip_indices(std::int64_t length, int k) {
  std::vector<std::int64_t> idx;
  k = static_cast<int>(std::min<std::int64_t>(k, length));
  if (k <= 1) return {0};
  for (int i = 0; i < k; ++i)
    idx.push_back(std::llround(static_cast<double>(i) * static_cast<double>(length - 1) / (k - 1)));
  return idx;
}

namespace {

void blit(Image8& img, const torch::Tensor& frame, int x0, int y0) {
  const auto f = frame.to(torch::kFloat64).contiguous();
  auto a = f.accessor<double, 3>();
  const int c = static_cast<int>(f.size(0)), h = static_cast<int>(f.size(1)), w = static_cast<int>(f.size(2));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < img.channels; ++k) img.at(y0 + y, x0 + x, k) = to_pixel(a[std::min(k, c - 1)][y][x]);
}

void blit_strip(Image8& img, const Video& v, int k, int x0, int y0) {
  const auto idx = strip_indices(v.num_frames(), k);
  for (std::size_t i = 0; i < idx.size(); ++i)
    blit(img, v.frame(idx[i]), x0 + static_cast<int>(i * v.width()), y0);
}

}  // namespace

Image8 make_comparison_grid(const std::vector<Video>& sources, const std::vector<TargetImage>& targets,
                            const std::vector<std::vector<Video>>& generated, int max_strip) {
  if (sources.empty() || targets.empty()) throw ArgumentError("comparison grid needs sources and targets");
  if (generated.size() != sources.size())
    throw ArgumentError("comparison grid: generated must have one row per source");
  for (const auto& row : generated)
    if (row.size() != targets.size())
      throw ArgumentError("comparison grid: generated must have one column per target");
  std::int64_t min_length = sources.front().num_frames();
  for (const auto& s : sources) min_length = std::min(min_length, s.num_frames());
  const auto h = sources.front().height(), w = sources.front().width();
  const auto layout = comparison_grid_layout(sources.size(), targets.size(), min_length, h, w, max_strip);
  const int channels = sources.front().channels() == 3 ? 3 : 1;
  Image8 img(layout.height, layout.width, channels, 255);
  const int strip_w = layout.strip_frames * static_cast<int>(w) + layout.pad;
  const int row_h = static_cast<int>(h) + layout.pad;
  for (std::size_t c = 0; c < targets.size(); ++c)
    blit(img, targets[c].pixels(), layout.pad + static_cast<int>(c + 1) * strip_w, layout.pad);
  for (std::size_t r = 0; r < sources.size(); ++r) {
    const int y0 = layout.pad + static_cast<int>(r + 1) * row_h;
    blit_strip(img, sources[r], layout.strip_frames, layout.pad, y0);
    for (std::size_t c = 0; c < targets.size(); ++c)
      blit_strip(img, generated[r][c], layout.strip_frames, layout.pad + static_cast<int>(c + 1) * strip_w, y0);
  }
  return img;
}

GridLayout make_comparison_grid(const std::vector<Video>& sources, const std::vector<TargetImage>& targets,
                                const std::vector<std::vector<Video>>& generated, const fs::path& png_path,
                                int max_strip) {
  const Image8 img = make_comparison_grid(sources, targets, generated, max_strip);
  if (png_path.has_parent_path()) fs::create_directories(png_path.parent_path());
  write_png(png_path.string(), img);
  std::int64_t min_length = sources.front().num_frames();
  for (const auto& s : sources) min_length = std::min(min_length, s.num_frames());
  return comparison_grid_layout(sources.size(), targets.size(), min_length, sources.front().height(),
                                sources.front().width(), max_strip);
}

}  // namespace dyntx
