#include "stormflow/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace stormflow::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  return f;
}

// libpng reports fatal errors through a callback that must not return; it
// longjmps back to the setjmp point in the calling function, which rethrows.
[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  std::fprintf(stderr, "libpng: %s\n", msg);
  png_longjmp(png, 1);
}
void png_warn(png_structp, png_const_charp) {}

class PngReader {
public:
  PngReader() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png_) throw DataError("libpng: out of memory");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw DataError("libpng: out of memory");
    }
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png_) throw Error("libpng: out of memory");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw Error("libpng: out of memory");
    }
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               int color_type, int bit_depth, const std::vector<std::uint8_t>& bytes,
               std::size_t row_bytes) {
  auto file = open_file(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png_))) throw Error("failed to encode PNG '" + path.string() + "'");
  png_init_io(w.png_, file.get());
  png_set_IHDR(w.png_, w.info_, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png_, w.info_);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(w.png_, bytes.data() + y * row_bytes);
  }
  png_write_end(w.png_, nullptr);
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RawRaster read_png_gray(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("not a PNG file: '" + path.string() + "'");
  }
  PngReader r;
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(r.png_))) throw DataError("failed to decode PNG '" + path.string() + "'");
  png_init_io(r.png_, file.get());
  png_set_sig_bytes(r.png_, 8);
  png_read_info(r.png_, r.info_);

  const auto width = png_get_image_width(r.png_, r.info_);
  const auto height = png_get_image_height(r.png_, r.info_);
  const int color = png_get_color_type(r.png_, r.info_);
  int depth = png_get_bit_depth(r.png_, r.info_);

  if (color != PNG_COLOR_TYPE_GRAY) {
    throw DataError("expected a single-band grayscale PNG: '" + path.string() + "'");
  }
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(r.png_);
    depth = 8;
  }
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(r.png_);
  png_read_update_info(r.png_, r.info_);

  const std::size_t row_bytes = png_get_rowbytes(r.png_, r.info_);
  buf.resize(row_bytes * height);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = buf.data() + y * row_bytes;
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);

  RawRaster out{Grid<double>(width, height), depth == 16 ? 65535.0 : 255.0};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, rows[y] + 2 * x, 2);
        out.values(x, y) = v;
      } else {
        out.values(x, y) = rows[y][x];
      }
    }
  }
  return out;
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("not a PNG file: '" + path.string() + "'");
  }
  PngReader r;
  RgbImage out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(r.png_))) throw DataError("failed to decode PNG '" + path.string() + "'");
  png_init_io(r.png_, file.get());
  png_set_sig_bytes(r.png_, 8);
  png_read_info(r.png_, r.info_);
  if (png_get_color_type(r.png_, r.info_) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(r.png_, r.info_) != 8) {
    throw DataError("expected an 8-bit RGB PNG: '" + path.string() + "'");
  }
  out = RgbImage(png_get_image_width(r.png_, r.info_), png_get_image_height(r.png_, r.info_));
  rows.resize(out.height);
  for (std::size_t y = 0; y < out.height; ++y) rows[y] = out.rgb.data() + y * out.width * 3;
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);
  return out;
}

Grid<double> read_f32(const std::filesystem::path& path, std::size_t width, std::size_t height) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != width * height * 4) {
    throw DataError("dimension mismatch: '" + path.string() + "' holds " +
                    std::to_string(bytes / 4) + " values, expected " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
  in.seekg(0);
  std::vector<std::uint32_t> raw(width * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  Grid<double> out(width, height);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::uint32_t bits = raw[i];
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_f32(const std::filesystem::path& path, const Grid<double>& grid) {
  std::vector<std::uint32_t> raw(grid.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(grid[i]));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    raw[i] = bits;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * 4));
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
  write_png(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.rgb, image.width * 3);
}

void write_png_gray8(const std::filesystem::path& path, const Grid<double>& values) {
  std::vector<std::uint8_t> bytes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) bytes[i] = to_u8(values[i]);
  write_png(path, values.width(), values.height(), PNG_COLOR_TYPE_GRAY, 8, bytes, values.width());
}

void write_png_gray16(const std::filesystem::path& path, const Grid<double>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto v =
        static_cast<std::uint16_t>(std::lround(std::clamp(values[i], 0.0, 1.0) * 65535.0));
    bytes[2 * i] = static_cast<std::uint8_t>(v >> 8);  // PNG is big-endian
    bytes[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
  }
  write_png(path, values.width(), values.height(), PNG_COLOR_TYPE_GRAY, 16, bytes,
            values.width() * 2);
}

}  // namespace stormflow::io
