#include "dyntx/png_io.hpp"

#include <png.h>

#include <cstring>

#include "dyntx/errors.hpp"

namespace dyntx {

namespace {

png_uint_32 format_for(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 2: return PNG_FORMAT_GA;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
  }
  throw FormatError("PNG supports 1 to 4 channels, got " + std::to_string(channels));
}

}  // namespace

Image8 read_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot read PNG '" + path + "': " + img.message);
  img.format &= (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA);
  const int channels = static_cast<int>(PNG_IMAGE_SAMPLE_CHANNELS(img.format));
  Image8 out(static_cast<int>(img.height), static_cast<int>(img.width), channels);
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot decode PNG '" + path + "': " + msg);
  }
  return out;
}

void write_png(const std::string& path, const Image8& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = format_for(image.channels);
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data.data(), 0, nullptr))
    throw IoError("cannot write PNG '" + path + "': " + img.message);
}

}  // namespace dyntx
