#include "mvedit/latent.hpp"

#include <cmath>
#include <random>

namespace mvedit {

LatentTensor::LatentTensor(LatentShape shape, double fill) : shape_(shape) {
  if (shape.batch < 1 || shape.channels < 1 || shape.height < 0 || shape.width < 0) {
    fail(ErrorKind::InvalidArgument, "latent shape needs batch >= 1 and channels >= 1");
  }
  data_.assign(shape.size(), fill);
}

LatentTensor LatentTensor::slice(int b) const {
  if (b < 0 || b >= shape_.batch) fail(ErrorKind::Index, "latent batch index out of range");
  LatentTensor out({1, shape_.channels, shape_.height, shape_.width});
  const std::size_t n = out.shape().size();
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(b * n), n, out.data_.begin());
  return out;
}

void LatentTensor::assign_slice(int b, const LatentTensor& single) {
  if (b < 0 || b >= shape_.batch) fail(ErrorKind::Index, "latent batch index out of range");
  if (single.shape() != LatentShape{1, shape_.channels, shape_.height, shape_.width}) {
    fail(ErrorKind::InvalidArgument, "latent slice shape mismatch");
  }
  const std::size_t n = single.shape().size();
  std::copy(single.data_.begin(), single.data_.end(), data_.begin() + static_cast<std::ptrdiff_t>(b * n));
}

bool LatentTensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const LatentTensor& a, const LatentTensor& b, const char* what) {
  if (a.shape() != b.shape()) fail(ErrorKind::InvalidArgument, std::string(what) + ": latent shapes differ");
}

LatentTensor stack(const std::vector<LatentTensor>& singles) {
  if (singles.empty()) fail(ErrorKind::InvalidBatch, "cannot stack zero latents");
  const auto& s = singles.front().shape();
  LatentTensor out({static_cast<int>(singles.size()), s.channels, s.height, s.width});
  for (std::size_t b = 0; b < singles.size(); ++b) out.assign_slice(static_cast<int>(b), singles[b]);
  return out;
}

LatentTensor gaussian_like(const LatentShape& shape, std::uint64_t seed) {
  LatentTensor out(shape);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.data()) v = normal(rng);
  return out;
}

LatentMask latent_mask(const Mask& pixels, int factor, double coverage, int dilation) {
  if (factor < 1 || pixels.width() % factor != 0 || pixels.height() % factor != 0) {
    fail(ErrorKind::InvalidArgument, "mask size must be a multiple of the latent factor");
  }
  const int w = pixels.width() / factor;
  const int h = pixels.height() / factor;
  const double needed = coverage * factor * factor;
  LatentMask cells(w, h);
  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      int set = 0;
      for (int y = 0; y < factor; ++y) {
        for (int x = 0; x < factor; ++x) set += pixels.at(cx * factor + x, cy * factor + y) ? 1 : 0;
      }
      cells.at(cx, cy) = set >= needed ? 1 : 0;
    }
  }
  return dilation > 0 ? dilate(cells, dilation) : cells;
}

}  // namespace mvedit
