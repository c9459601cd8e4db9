#include <cmath>

#include "mvedit/guidance.hpp"

namespace mvedit {

LatentTensor lsf_fuse(const LatentTensor& sampled, const LatentTensor& warped,
                      const std::vector<LatentMask>& masks) {
  require_same_shape(sampled, warped, "lsf_fuse");
  if (masks.size() != 1 && masks.size() != static_cast<std::size_t>(sampled.batch())) {
    fail(ErrorKind::InvalidArgument, "lsf_fuse needs one mask or one per batch entry");
  }
  LatentTensor out = sampled;
  for (int b = 0; b < sampled.batch(); ++b) {
    const LatentMask& m = masks.size() == 1 ? masks[0] : masks[b];
    if (m.width() != sampled.width() || m.height() != sampled.height()) {
      fail(ErrorKind::InvalidArgument, "lsf_fuse: mask size differs from latent size");
    }
    for (int c = 0; c < sampled.channels(); ++c) {
      for (int y = 0; y < sampled.height(); ++y) {
        for (int x = 0; x < sampled.width(); ++x) {
          if (m.at(x, y)) out.at(b, c, y, x) = warped.at(b, c, y, x);
        }
      }
    }
  }
  return out;
}

namespace {

int grid_side(int batch) {
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(batch))));
  if (batch < 1 || n * n != batch) {
    fail(ErrorKind::InvalidBatch, "batch of " + std::to_string(batch) + " is not a perfect square");
  }
  return n;
}

}  // namespace

LatentTensor grid_pack(const LatentTensor& views) {
  const int n = grid_side(views.batch());
  const int h = views.height();
  const int w = views.width();
  LatentTensor grid({1, views.channels(), n * h, n * w});
  for (int b = 0; b < views.batch(); ++b) {
    const int oy = (b / n) * h;
    const int ox = (b % n) * w;
    for (int c = 0; c < views.channels(); ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) grid.at(0, c, oy + y, ox + x) = views.at(b, c, y, x);
      }
    }
  }
  return grid;
}

LatentTensor grid_unpack(const LatentTensor& grid, int batch) {
  const int n = grid_side(batch);
  if (grid.batch() != 1 || grid.height() % n != 0 || grid.width() % n != 0) {
    fail(ErrorKind::InvalidBatch, "grid does not split into " + std::to_string(batch) + " tiles");
  }
  const int h = grid.height() / n;
  const int w = grid.width() / n;
  LatentTensor views({batch, grid.channels(), h, w});
  for (int b = 0; b < batch; ++b) {
    const int oy = (b / n) * h;
    const int ox = (b % n) * w;
    for (int c = 0; c < grid.channels(); ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) views.at(b, c, y, x) = grid.at(0, c, oy + y, ox + x);
      }
    }
  }
  return views;
}

LatentTensor predict_noise_views(const Denoiser& denoiser, const LatentTensor& views, int t,
                                 const Conditioning& y, bool grid) {
  if (grid) {
    const LatentTensor eps = denoiser.predict_noise(grid_pack(views), t, y);
    return grid_unpack(eps, views.batch());
  }
  LatentTensor out(views.shape());
  for (int b = 0; b < views.batch(); ++b) out.assign_slice(b, denoiser.predict_noise(views.slice(b), t, y));
  return out;
}

}  // namespace mvedit
