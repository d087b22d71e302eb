#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stormflow/grid.hpp"

namespace stormflow::io {

/// Single-band image decoded from disk. `max_value` is the full-scale code
/// (255 for 8-bit, 65535 for 16-bit PNG, 1.0 for float grids).
struct RawRaster {
  Grid<double> values;
  double max_value = 1.0;
};

RawRaster read_png_gray(const std::filesystem::path& path);

/// Little-endian, row-major float32 grid. The file carries no header, so
/// the caller supplies the dimensions.
Grid<double> read_f32(const std::filesystem::path& path, std::size_t width, std::size_t height);
void write_f32(const std::filesystem::path& path, const Grid<double>& grid);

/// 8-bit RGB image, pixels packed as r,g,b per column, rows top to bottom.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}
  void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &rgb[(y * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);
/// Reads an 8-bit RGB PNG; other layouts raise DataError.
RgbImage read_png_rgb(const std::filesystem::path& path);
/// Writes values in [0,1] as 8-bit grayscale (clamped).
void write_png_gray8(const std::filesystem::path& path, const Grid<double>& values);
/// Writes values in [0,1] as 16-bit grayscale (clamped).
void write_png_gray16(const std::filesystem::path& path, const Grid<double>& values);

}  // namespace stormflow::io
