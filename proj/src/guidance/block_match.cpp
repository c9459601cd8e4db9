// SSD block matching. The parallel and serial versions share the per-pixel
// search; only the loop driving it differs.

#include <cmath>
#include <limits>

#include "mvedit/models.hpp"

namespace mvedit {
namespace {

inline int clampi(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

double patch_ssd(const ImageD& from, const ImageD& to, int x, int y, int dx, int dy, int radius) {
  const int wmax = from.width() - 1;
  const int hmax = from.height() - 1;
  const int channels = from.channels();
  double ssd = 0.0;
  for (int oy = -radius; oy <= radius; ++oy) {
    const int fy = clampi(y + oy, hmax);
    const int ty = clampi(y + oy + dy, hmax);
    for (int ox = -radius; ox <= radius; ++ox) {
      const int fx = clampi(x + ox, wmax);
      const int tx = clampi(x + ox + dx, wmax);
      for (int c = 0; c < channels; ++c) {
        const double diff = from.at(fx, fy, c) - to.at(tx, ty, c);
        ssd += diff * diff;
      }
    }
  }
  return ssd;
}

void match_pixel(const ImageD& from, const ImageD& to, const BlockMatcherOptions& o, int x, int y,
                 FlowField& out) {
  double best = std::numeric_limits<double>::infinity();
  int best_dx = 0, best_dy = 0, best_r2 = 0;
  for (int dy = -o.search_radius; dy <= o.search_radius; ++dy) {
    for (int dx = -o.search_radius; dx <= o.search_radius; ++dx) {
      const double ssd = patch_ssd(from, to, x, y, dx, dy, o.patch_radius);
      const int r2 = dx * dx + dy * dy;
      if (ssd < best || (ssd == best && r2 < best_r2)) {
        best = ssd;
        best_dx = dx;
        best_dy = dy;
        best_r2 = r2;
      }
    }
  }
  out.set(x, y, best_dx, best_dy);
}

void require_pair(const ImageD& from, const ImageD& to) {
  require_same_size(from, to, "block matching");
  if (from.channels() != to.channels()) fail(ErrorKind::InvalidArgument, "block matching: channel counts differ");
}

void check_options(const BlockMatcherOptions& o) {
  if (o.patch_radius < 0 || o.search_radius < 0 || o.window_radius < 0 || !(o.temperature > 0.0)) {
    fail(ErrorKind::InvalidConfig, "block matcher radii must be >= 0 and temperature > 0");
  }
}

struct SoftPixel {
  int x = 0, y = 0;
  int cx = 0, cy = 0;  // window centre (rounded target flow)
  double fu = 0.0, fv = 0.0;
  std::vector<double> weight;  // softmin weights over the window
};

SoftPixel soft_pixel(const ImageD& from, const ImageD& to, const BlockMatcherOptions& o,
                     const FlowField& target, int x, int y) {
  SoftPixel s;
  s.x = x;
  s.y = y;
  s.cx = nearest_pixel(target.u.at(x, y));
  s.cy = nearest_pixel(target.v.at(x, y));
  const int side = 2 * o.window_radius + 1;
  s.weight.resize(static_cast<std::size_t>(side) * side);
  double lowest = std::numeric_limits<double>::infinity();
  for (int ey = 0; ey < side; ++ey) {
    for (int ex = 0; ex < side; ++ex) {
      const double ssd = patch_ssd(from, to, x, y, s.cx + ex - o.window_radius, s.cy + ey - o.window_radius,
                                   o.patch_radius);
      s.weight[ey * side + ex] = ssd;
      lowest = std::min(lowest, ssd);
    }
  }
  double z = 0.0;
  for (double& w : s.weight) {
    w = std::exp(-(w - lowest) / o.temperature);
    z += w;
  }
  for (int ey = 0; ey < side; ++ey) {
    for (int ex = 0; ex < side; ++ex) {
      double& w = s.weight[ey * side + ex];
      w /= z;
      s.fu += w * (s.cx + ex - o.window_radius);
      s.fv += w * (s.cy + ey - o.window_radius);
    }
  }
  return s;
}

std::vector<std::pair<int, int>> valid_pixels(const FlowField& target) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (target.is_valid(x, y)) out.emplace_back(x, y);
    }
  }
  return out;
}

std::vector<SoftPixel> soft_pixels(const ImageD& from, const ImageD& to, const BlockMatcherOptions& o,
                                   const FlowField& target) {
  require_pair(from, to);
  require_same_size(from, target.valid, "flow loss");
  const auto pixels = valid_pixels(target);
  std::vector<SoftPixel> out(pixels.size());
  const auto n = static_cast<std::int64_t>(pixels.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = soft_pixel(from, to, o, target, pixels[i].first, pixels[i].second);
  }
  return out;
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

BlockMatcher::BlockMatcher(BlockMatcherOptions options) : options_(options) { check_options(options_); }

FlowField BlockMatcher::estimate(const ImageD& from, const ImageD& to, const Mask* roi) const {
  require_pair(from, to);
  if (roi != nullptr) require_same_size(from, *roi, "block matching roi");
  FlowField out(from.width(), from.height());
  const int h = from.height();
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < from.width(); ++x) {
      if (roi == nullptr || roi->at(x, y)) match_pixel(from, to, options_, x, y, out);
    }
  }
  return out;
}

FlowField BlockMatcher::soft_flow(const ImageD& from, const ImageD& to, const FlowField& target) const {
  FlowField out(from.width(), from.height());
  for (const auto& s : soft_pixels(from, to, options_, target)) out.set(s.x, s.y, s.fu, s.fv);
  return out;
}

double BlockMatcher::flow_loss(const ImageD& from, const ImageD& to, const FlowField& target) const {
  const auto pixels = soft_pixels(from, to, options_, target);
  if (pixels.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : pixels) {
    sum += std::abs(s.fu - target.u.at(s.x, s.y)) + std::abs(s.fv - target.v.at(s.x, s.y));
  }
  return sum / static_cast<double>(pixels.size());
}

std::optional<ImageD> BlockMatcher::flow_loss_gradient(const ImageD& from, const ImageD& to,
                                                       const FlowField& target) const {
  const auto pixels = soft_pixels(from, to, options_, target);
  ImageD grad(to.width(), to.height(), to.channels());
  if (pixels.empty()) return grad;
  const BlockMatcherOptions& o = options_;
  const int side = 2 * o.window_radius + 1;
  const int wmax = to.width() - 1;
  const int hmax = to.height() - 1;
  const double inv_n = 1.0 / static_cast<double>(pixels.size());
  // Serial scatter keeps the summation order fixed.
  for (const auto& s : pixels) {
    const double gu = sign(s.fu - target.u.at(s.x, s.y)) * inv_n;
    const double gv = sign(s.fv - target.v.at(s.x, s.y)) * inv_n;
    for (int ey = 0; ey < side; ++ey) {
      for (int ex = 0; ex < side; ++ex) {
        const int dx = s.cx + ex - o.window_radius;
        const int dy = s.cy + ey - o.window_radius;
        const double p = s.weight[ey * side + ex];
        // dL/dssd for this displacement.
        const double k = -(p / o.temperature) * (gu * (dx - s.fu) + gv * (dy - s.fv));
        if (k == 0.0) continue;
        for (int oy = -o.patch_radius; oy <= o.patch_radius; ++oy) {
          const int fy = clampi(s.y + oy, hmax);
          const int ty = clampi(s.y + oy + dy, hmax);
          for (int ox = -o.patch_radius; ox <= o.patch_radius; ++ox) {
            const int fx = clampi(s.x + ox, wmax);
            const int tx = clampi(s.x + ox + dx, wmax);
            for (int c = 0; c < to.channels(); ++c) {
              grad.at(tx, ty, c) += -2.0 * k * (from.at(fx, fy, c) - to.at(tx, ty, c));
            }
          }
        }
      }
    }
  }
  return grad;
}

namespace serial {

FlowField block_match(const ImageD& from, const ImageD& to, const BlockMatcherOptions& options,
                      const Mask* roi) {
  check_options(options);
  require_pair(from, to);
  if (roi != nullptr) require_same_size(from, *roi, "block matching roi");
  FlowField out(from.width(), from.height());
  for (int y = 0; y < from.height(); ++y) {
    for (int x = 0; x < from.width(); ++x) {
      if (roi == nullptr || roi->at(x, y)) match_pixel(from, to, options, x, y, out);
    }
  }
  return out;
}

}  // namespace serial
}  // namespace mvedit
