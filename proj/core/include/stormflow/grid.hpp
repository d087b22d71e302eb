#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stormflow {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, frames, reports).
class DataError : public Error {
public:
  using Error::Error;
};

/// Invalid parameters or configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Dense row-major 2-D grid. Row y, column x lives at index y * width + x.
template <typename T>
class Grid {
public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}

  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::span<T> values() { return data_; }
  [[nodiscard]] std::span<const T> values() const { return data_; }

  [[nodiscard]] bool same_shape(std::size_t w, std::size_t h) const noexcept {
    return width_ == w && height_ == h;
  }
  template <typename U>
  [[nodiscard]] bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Grid&) const = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

// std::vector<bool> is bit-packed and has no span; masks use bytes.
using Mask = Grid<unsigned char>;

}  // namespace stormflow
