#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mvedit/flow.hpp"

namespace mvedit::detail {

struct ProjectedCandidate {
  std::int64_t pixel = -1;  // -1: skipped
  double depth = 0.0;
  double center_distance2 = 0.0;
  double du = 0.0;
  double dv = 0.0;
};

inline ProjectedCandidate project_pair(const Vec3& original, const Vec3& moved,
                                       const CameraView& view) {
  ProjectedCandidate c;
  const Vec3 cam_o = view.world_to_camera(original);
  const Vec3 cam_m = view.world_to_camera(moved);
  const auto uv_o = view.project_camera(cam_o);
  const auto uv_m = view.project_camera(cam_m);
  if (!uv_o || !uv_m) return c;
  const int px = nearest_pixel(uv_o->x());
  const int py = nearest_pixel(uv_o->y());
  if (px < 0 || py < 0 || px >= view.width() || py >= view.height()) return c;
  c.pixel = static_cast<std::int64_t>(py) * view.width() + px;
  c.depth = cam_o.z();
  const double ox = uv_o->x() - px;
  const double oy = uv_o->y() - py;
  c.center_distance2 = ox * ox + oy * oy;
  c.du = uv_m->x() - uv_o->x();
  c.dv = uv_m->y() - uv_o->y();
  return c;
}

/// Order-independent z-buffer: nearest depth defines the surface band, then
/// center distance, then point index. Returns -1 where nothing landed.
std::vector<std::int64_t> resolve_projection(const std::vector<ProjectedCandidate>& candidates,
                                             std::size_t pixel_count, double depth_band);

/// Footprint closing + nearest-valid fill restricted to the footprint.
void densify_within_footprint(FlowField& flow, int closing_radius);

FlowField assemble_projected_flow(const std::vector<ProjectedCandidate>& candidates,
                                  const CameraView& view, const ProjectionOptions& options);

inline double sample_bilinear(const ImageD& image, double sx, double sy, int c) {
  const int w = image.width();
  const int h = image.height();
  sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = (1.0 - fx) * image.at(x0, y0, c) + fx * image.at(x1, y0, c);
  const double bottom = (1.0 - fx) * image.at(x0, y1, c) + fx * image.at(x1, y1, c);
  return (1.0 - fy) * top + fy * bottom;
}

inline void warp_pixel(const ImageD& image, const FlowField& flow, ImageD& out, int x, int y) {
  if (!flow.is_valid(x, y)) {
    for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(x, y, c);
    return;
  }
  const double sx = x + static_cast<double>(flow.u.at(x, y));
  const double sy = y + static_cast<double>(flow.v.at(x, y));
  for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = sample_bilinear(image, sx, sy, c);
}

struct SplatCandidate {
  std::int64_t target = -1;
  double magnitude = 0.0;
};

inline SplatCandidate splat_target(const FlowField& flow, int x, int y) {
  SplatCandidate s;
  if (!flow.is_valid(x, y)) return s;
  const double du = flow.u.at(x, y);
  const double dv = flow.v.at(x, y);
  const int tx = nearest_pixel(x + du);
  const int ty = nearest_pixel(y + dv);
  if (tx < 0 || ty < 0 || tx >= flow.width() || ty >= flow.height()) return s;
  s.target = static_cast<std::int64_t>(ty) * flow.width() + tx;
  s.magnitude = std::hypot(du, dv);
  return s;
}

template <typename Pixel>
SplatResult<Pixel> resolve_splat(const Raster<Pixel>& image,
                                 const std::vector<SplatCandidate>& candidates) {
  const std::size_t n = image.pixel_count();
  std::vector<std::int64_t> winner(n, -1);
  std::vector<double> best(n, -1.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.target < 0) continue;
    if (c.magnitude > best[c.target]) {  // strict: equal magnitudes keep the lower index
      best[c.target] = c.magnitude;
      winner[c.target] = static_cast<std::int64_t>(i);
    }
  }
  SplatResult<Pixel> out{Raster<Pixel>(image.width(), image.height(), image.channels()),
                         Mask(image.width(), image.height())};
  const int channels = image.channels();
  for (std::size_t t = 0; t < n; ++t) {
    if (winner[t] < 0) continue;
    out.footprint.data()[t] = 1;
    for (int c = 0; c < channels; ++c) {
      out.image.data()[t * channels + c] = image.data()[winner[t] * channels + c];
    }
  }
  return out;
}

}  // namespace mvedit::detail
