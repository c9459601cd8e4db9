#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvedit/raster.hpp"

namespace mvedit {

struct LatentShape {
  int batch = 0;
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(batch) * channels * height * width;
  }
  bool operator==(const LatentShape&) const = default;
};

/// Dense B x C x h x w array of doubles.
class LatentTensor {
 public:
  LatentTensor() = default;
  explicit LatentTensor(LatentShape shape, double fill = 0.0);

  const LatentShape& shape() const noexcept { return shape_; }
  int batch() const noexcept { return shape_.batch; }
  int channels() const noexcept { return shape_.channels; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }

  std::size_t index(int b, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(b) * shape_.channels + c) * shape_.height + y) * shape_.width + x;
  }
  double& at(int b, int c, int y, int x) noexcept { return data_[index(b, c, y, x)]; }
  double at(int b, int c, int y, int x) const noexcept { return data_[index(b, c, y, x)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Batch entry b as a 1 x C x h x w tensor.
  LatentTensor slice(int b) const;
  void assign_slice(int b, const LatentTensor& single);

  bool all_finite() const noexcept;
  bool operator==(const LatentTensor&) const = default;

 private:
  LatentShape shape_;
  std::vector<double> data_;
};

void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* what);

/// Stacks 1 x C x h x w tensors along the batch axis.
LatentTensor stack(const std::vector<LatentTensor>& singles);

/// Standard normal samples; the same seed always yields the same tensor.
LatentTensor gaussian_like(const LatentShape& shape, std::uint64_t seed);

/// Per-cell binary mask at latent resolution (h x w).
using LatentMask = Mask;

/// A cell is set when at least `coverage` of its factor x factor pixel block is
/// set; the result is then dilated by `dilation` cells.
LatentMask latent_mask(const Mask& pixels, int factor = 8, double coverage = 0.25, int dilation = 1);

}  // namespace mvedit
