#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "omnicount/error.hpp"

namespace omnicount {

// Dense row-major 2-D raster. Masks are Grid2D<uint8_t> holding {0,1};
// depth and heatmaps are Grid2D<float>.
template <typename T>
class Grid2D {
 public:
  using value_type = T;

  Grid2D() = default;
  Grid2D(int height, int width, T fill = T{})
      : height_(checked_dim(height)), width_(checked_dim(width)),
        data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill) {}
  Grid2D(int height, int width, std::vector<T> data)
      : height_(checked_dim(height)), width_(checked_dim(width)), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_)) {
      throw Error(ErrorKind::DimMismatch,
                  "grid data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(height_) + "x" + std::to_string(width_));
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int y, int x) { return data_[index(y, x)]; }
  const T& operator()(int y, int x) const { return data_[index(y, x)]; }

  bool in_bounds(int y, int x) const noexcept {
    return y >= 0 && x >= 0 && y < height_ && x < width_;
  }
  bool same_dims(int height, int width) const noexcept {
    return height_ == height && width_ == width;
  }
  template <typename U>
  bool same_dims(const Grid2D<U>& other) const noexcept {
    return same_dims(other.height(), other.width());
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  static int checked_dim(int d) {
    if (d < 0) throw Error(ErrorKind::InvalidArgument, "negative grid dimension");
    return d;
  }
  std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// Row-major (h, w, c) volume: activations and RGB images.
template <typename T>
class Grid3D {
 public:
  using value_type = T;

  Grid3D() = default;
  Grid3D(int height, int width, int channels, T fill = T{})
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {
    if (height < 0 || width < 0 || channels < 0) {
      throw Error(ErrorKind::InvalidArgument, "negative grid dimension");
    }
  }
  Grid3D(int height, int width, int channels, std::vector<T> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 0 || width < 0 || channels < 0 ||
        data_.size() != static_cast<std::size_t>(height) * width * channels) {
      throw Error(ErrorKind::DimMismatch, "volume data length does not match dims");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int y, int x, int c) { return data_[index(y, x, c)]; }
  const T& operator()(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  friend bool operator==(const Grid3D&, const Grid3D&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using Mask = Grid2D<std::uint8_t>;
using FloatGrid = Grid2D<float>;
using Volume = Grid3D<float>;

inline std::size_t mask_area(const Mask& mask) {
  std::size_t area = 0;
  for (auto v : mask.data()) area += v != 0;
  return area;
}

}  // namespace omnicount
