#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mvedit/error.hpp"

namespace mvedit {

/// Row-major, channel-interleaved 2D grid. Pixel (x, y) has its center at
/// integer coordinates (x, y).
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1) {
      fail(ErrorKind::InvalidArgument, "raster dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  T& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  template <typename U>
  bool same_size(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using RgbImage = Raster<std::uint8_t>;  // 3 channels, 8 bit
using Mask = Raster<std::uint8_t>;      // 1 channel, 0 or 1
using DepthMap = Raster<double>;        // meters, 0 = invalid
using ImageD = Raster<double>;          // 3 channels, [0, 1]

/// Round-half-up to the nearest pixel index; the one rounding rule used by
/// every splatting and rasterization routine.
inline int nearest_pixel(double coordinate) noexcept {
  return static_cast<int>(std::floor(coordinate + 0.5));
}

ImageD to_unit(const RgbImage& image);
RgbImage to_rgb8(const ImageD& image);

std::size_t count_set(const Mask& mask);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_and_not(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);
Mask dilate(const Mask& mask, int radius);
Mask erode(const Mask& mask, int radius);

template <typename A, typename B>
void require_same_size(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (!a.same_size(b)) {
    fail(ErrorKind::InvalidArgument, std::string(what) + ": raster sizes differ");
  }
}

}  // namespace mvedit
