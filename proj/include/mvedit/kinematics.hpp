#pragma once

#include <vector>

#include "mvedit/flow.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

/// Sparse 3D correspondences lifted from a single-view flow (P_so, P_sm).
struct SparsePointPair {
  std::vector<Vec3> original;
  std::vector<Vec3> moved;

  std::size_t size() const noexcept { return original.size(); }
};

/// Lift every masked pixel to 3D at its depth, once at the pixel and once at
/// pixel + flow (same depth). DegenerateSelection on an empty mask,
/// InvalidDepth when a masked pixel has d <= 0.
SparsePointPair unproject_sparse(const CameraView& view, const FlowField& flow, const Mask& mask);

/// Mask of pixels with positive depth and moving flow.
Mask sparse_selection(const CameraView& view, const FlowField& flow);

Vec3 translation_offset(const SparsePointPair& pair);
ObjectPoints estimate_translation(const SparsePointPair& pair, const ObjectPoints& object);

/// Sum of magnitudes over (count * max magnitude), non-zero pixels only.
double estimate_scale_shrink(const FlowField& flow);

/// Pixels swept by the segments p -> p + f(p) of every moving pixel, sampled
/// every half pixel, united with the moving region.
Mask swept_region(const FlowField& flow);

/// |swept_region| / |moving region|. `center` must lie in the raster.
double estimate_scale_enlarge(const FlowField& flow, const Vec2& center);

enum class ScaleAnchor { Origin, Centroid };

ObjectPoints apply_scaling(const ObjectPoints& object, double factor,
                           ScaleAnchor anchor = ScaleAnchor::Origin);

Vec3 centroid(const std::vector<Vec3>& points);
Mat3 rotation_z(double angle_deg);
ObjectPoints apply_rotation(const ObjectPoints& object, double angle_deg);

/// Plane A x + B y + D = 0, parallel to world Z.
struct PlaneCoeffs {
  double A = 0.0;
  double B = 0.0;
  double D = 0.0;

  double signed_distance(const Vec3& p) const;
  double residual(const Vec3& p) const { return A * p.x() + B * p.y() + D; }
};

PlaneCoeffs fit_stretch_plane(const Vec3& p1, const Vec3& p2);

/// Per-point factor dis / max|dis|, in [-1, 1].
std::vector<double> stretch_factors(const ObjectPoints& object, const PlaneCoeffs& plane);

/// The sparse offset with the largest norm (first on ties).
Vec3 dominant_offset(const SparsePointPair& pair);

/// P_m = P_o + t_f * dominant offset. With `clamp_one_sided`, negative
/// factors are clamped to 0 so only the dragged side moves.
ObjectPoints apply_stretch(const ObjectPoints& object, const PlaneCoeffs& plane,
                           const SparsePointPair& pair, bool clamp_one_sided = false);

}  // namespace mvedit
