#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dyntx {

/// 8-bit interleaved image (row-major, HWC). channels ∈ {1, 2, 3, 4} map to
/// grey, grey+alpha, RGB, RGBA.
struct Image8 {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int h, int w, int c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

Image8 read_png(const std::string& path);
void write_png(const std::string& path, const Image8& image);

}  // namespace dyntx
