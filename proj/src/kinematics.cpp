#include "mvedit/kinematics.hpp"

#include <cmath>
#include <numbers>

namespace mvedit {

Mask sparse_selection(const CameraView& view, const FlowField& flow) {
  require_same_size(view.depth, flow.valid, "sparse_selection");
  Mask mask(flow.width(), flow.height());
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      mask.at(x, y) = (flow.moves(x, y) && view.depth.at(x, y) > 0.0) ? 1 : 0;
    }
  }
  return mask;
}

SparsePointPair unproject_sparse(const CameraView& view, const FlowField& flow, const Mask& mask) {
  require_same_size(view.depth, flow.valid, "unproject_sparse");
  require_same_size(mask, flow.valid, "unproject_sparse");
  SparsePointPair pair;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const double d = view.depth.at(x, y);
      if (!(d > 0.0)) {
        fail(ErrorKind::InvalidDepth,
             "pixel (" + std::to_string(x) + "," + std::to_string(y) + ") has no depth");
      }
      pair.original.push_back(view.backproject(x, y, d));
      pair.moved.push_back(view.backproject(x + static_cast<double>(flow.u.at(x, y)),
                                            y + static_cast<double>(flow.v.at(x, y)), d));
    }
  }
  if (pair.original.empty()) fail(ErrorKind::DegenerateSelection, "sparse flow mask is empty");
  return pair;
}

namespace {

void require_pair(const SparsePointPair& pair) {
  if (pair.original.empty() || pair.original.size() != pair.moved.size()) {
    fail(ErrorKind::InvalidArgument, "sparse point pair must be non-empty with equal lengths");
  }
}

}  // namespace

Vec3 translation_offset(const SparsePointPair& pair) {
  require_pair(pair);
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < pair.size(); ++i) sum += pair.moved[i] - pair.original[i];
  return sum / static_cast<double>(pair.size());
}

ObjectPoints estimate_translation(const SparsePointPair& pair, const ObjectPoints& object) {
  const Vec3 offset = translation_offset(pair);
  ObjectPoints out{object.points, object.source_label};
  for (auto& p : out.points) p += offset;
  return out;
}

double estimate_scale_shrink(const FlowField& flow) {
  double sum = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.moves(x, y)) continue;
      const double m = flow.magnitude(x, y);
      sum += m;
      max = std::max(max, m);
      ++count;
    }
  }
  if (count == 0) fail(ErrorKind::DegenerateFlow, "flow has no moving pixel");
  // Rounding can push the mean a hair above the max when all magnitudes agree.
  return std::min(1.0, sum / (static_cast<double>(count) * max));
}

Mask swept_region(const FlowField& flow) {
  Mask region = flow.moving_mask();
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.moves(x, y)) continue;
      const double du = flow.u.at(x, y);
      const double dv = flow.v.at(x, y);
      const int steps = static_cast<int>(std::ceil(std::hypot(du, dv) / 0.5));
      for (int k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        const int px = nearest_pixel(x + t * du);
        const int py = nearest_pixel(y + t * dv);
        if (region.contains(px, py)) region.at(px, py) = 1;
      }
    }
  }
  return region;
}

double estimate_scale_enlarge(const FlowField& flow, const Vec2& center) {
  if (!(center.x() >= 0.0 && center.y() >= 0.0 && center.x() < flow.width() &&
        center.y() < flow.height())) {
    fail(ErrorKind::InvalidArgument, "scaling center lies outside the raster");
  }
  const std::size_t moving = count_set(flow.moving_mask());
  if (moving == 0) fail(ErrorKind::DegenerateFlow, "flow has no moving pixel");
  return static_cast<double>(count_set(swept_region(flow))) / static_cast<double>(moving);
}

Vec3 centroid(const std::vector<Vec3>& points) {
  if (points.empty()) fail(ErrorKind::InvalidArgument, "centroid of an empty point set");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

ObjectPoints apply_scaling(const ObjectPoints& object, double factor, ScaleAnchor anchor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    fail(ErrorKind::InvalidFactor, "scale factor must be positive, got " + std::to_string(factor));
  }
  ObjectPoints out{object.points, object.source_label};
  if (anchor == ScaleAnchor::Origin) {
    for (auto& p : out.points) p *= factor;
  } else {
    const Vec3 c = centroid(object.points);
    for (auto& p : out.points) p = factor * (p - c) + c;
  }
  return out;
}

Mat3 rotation_z(double angle_deg) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 rot;
  rot << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return rot;
}

ObjectPoints apply_rotation(const ObjectPoints& object, double angle_deg) {
  if (object.points.size() < 3) fail(ErrorKind::DegenerateSelection, "rotation needs at least 3 points");
  const Mat3 rot = rotation_z(angle_deg);
  const Vec3 c = centroid(object.points);
  ObjectPoints out{object.points, object.source_label};
  for (auto& p : out.points) p = rot * (p - c) + c;
  return out;
}

double PlaneCoeffs::signed_distance(const Vec3& p) const {
  return residual(p) / std::sqrt(A * A + B * B);
}

PlaneCoeffs fit_stretch_plane(const Vec3& p1, const Vec3& p2) {
  if (p1.x() == p2.x() && p1.y() == p2.y()) {
    fail(ErrorKind::DegeneratePlane, "stretch line endpoints coincide in XY");
  }
  // D = (x2 - x1) y1 - (y2 - y1) x1, expanded so that swapping the endpoints
  // negates every coefficient bit for bit.
  return {p2.y() - p1.y(), p1.x() - p2.x(), p2.x() * p1.y() - p1.x() * p2.y()};
}

std::vector<double> stretch_factors(const ObjectPoints& object, const PlaneCoeffs& plane) {
  if (!(plane.A != 0.0 || plane.B != 0.0)) fail(ErrorKind::DegeneratePlane, "plane normal is zero");
  std::vector<double> dis(object.points.size());
  double extent = 0.0;
  for (std::size_t i = 0; i < dis.size(); ++i) {
    dis[i] = plane.signed_distance(object.points[i]);
    extent = std::max(extent, std::abs(dis[i]));
  }
  if (!(extent >= 1e-12)) fail(ErrorKind::DegenerateStretch, "every point lies on the stretch plane");
  for (auto& d : dis) d /= extent;
  return dis;
}

Vec3 dominant_offset(const SparsePointPair& pair) {
  require_pair(pair);
  Vec3 best = pair.moved[0] - pair.original[0];
  double best_norm = best.squaredNorm();
  for (std::size_t i = 1; i < pair.size(); ++i) {
    const Vec3 d = pair.moved[i] - pair.original[i];
    if (d.squaredNorm() > best_norm) {
      best = d;
      best_norm = d.squaredNorm();
    }
  }
  return best;
}

ObjectPoints apply_stretch(const ObjectPoints& object, const PlaneCoeffs& plane,
                           const SparsePointPair& pair, bool clamp_one_sided) {
  const Vec3 offset = dominant_offset(pair);
  const auto factors = stretch_factors(object, plane);
  ObjectPoints out{object.points, object.source_label};
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const double t = clamp_one_sided ? std::max(0.0, factors[i]) : factors[i];
    out.points[i] += t * offset;
  }
  return out;
}

}  // namespace mvedit
