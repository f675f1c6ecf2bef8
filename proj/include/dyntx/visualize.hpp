#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <torch/torch.h>

#include "dyntx/data.hpp"
#include "dyntx/encoders.hpp"
#include "dyntx/png_io.hpp"

namespace dyntx {

/// Per-timestep channel-mean |code| maps (T×H_d×W_d, float64), divided by
/// their maximum over the whole sequence. All-zero codes stay zero.
torch::Tensor heatmap_values(const DynamicsCodeSeq& codes);

struct HeatmapInfo {
  int tiles = 0;
  int tile_height = 0;  // H_d·scale
  int tile_width = 0;   // W_d·scale
  int gap = 1;
  double max_value = 0;  // normalisation constant (max channel-mean |code|)
  bool degenerate = false;  // every code is zero
};

/// Colour for a value in [0, 1] (dark blue → red → yellow).
std::array<std::uint8_t, 3> colormap(double v);

/// Writes a single-row RGB grid of T tiles to `png_path`: image width
/// T·tile_width + (T−1)·gap, height tile_height; gaps are white. A sidecar
/// with the normalisation constants goes next to it with extension .json.
HeatmapInfo render_dynamics_heatmaps(const DynamicsCodeSeq& codes, const std::filesystem::path& png_path,
                                     int scale = 8);

/// Grid geometry. With K = min(max_strip, min source length) frames per
/// strip and `pad` px spacing:
///   width  = pad + (1 + targets)·(K·W + pad)
///   height = pad + (1 + sources)·(H + pad)
/// Row 0 holds the targets (column c + 1), column 0 the source strips,
/// cell (r + 1, c + 1) the video generated from source r and target c.
struct GridLayout {
  int strip_frames = 0;
  int width = 0;
  int height = 0;
  int pad = 2;
};

GridLayout comparison_grid_layout(std::size_t sources, std::size_t targets, std::int64_t min_length,
                                  std::int64_t frame_height, std::int64_t frame_width, int max_strip = 8,
                                  int pad = 2);

/// Indices of min(k, length) frames of a video of `length` frames, evenly
/// spaced and including both ends.
std::vector<std::int64_t> strip_indices(std::int64_t length, int k);

Image8 make_comparison_grid(const std::vector<Video>& sources, const std::vector<TargetImage>& targets,
                            const std::vector<std::vector<Video>>& generated, int max_strip = 8);
GridLayout make_comparison_grid(const std::vector<Video>& sources, const std::vector<TargetImage>& targets,
                                const std::vector<std::vector<Video>>& generated,
                                const std::filesystem::path& png_path, int max_strip = 8);

}  // namespace dyntx
