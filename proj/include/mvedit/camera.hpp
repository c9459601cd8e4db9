#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "mvedit/raster.hpp"

namespace mvedit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Points closer to the image plane than this (camera-frame Z) do not project.
inline constexpr double kMinProjectionDepth = 1e-6;

/// One calibrated viewpoint. Extrinsics map world to camera,
/// X_cam = R * X_world + T, with +Z forward and +Y down in the image.
struct CameraView {
  std::string view_id;
  Mat3 K = Mat3::Identity();
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  RgbImage image;
  DepthMap depth;

  double focal() const noexcept { return K(0, 0); }
  Vec2 principal_point() const noexcept { return {K(0, 2), K(1, 2)}; }
  int width() const noexcept { return image.width(); }
  int height() const noexcept { return image.height(); }

  Vec3 world_to_camera(const Vec3& world) const { return R * world + T; }
  Vec3 camera_to_world(const Vec3& camera) const { return R.transpose() * (camera - T); }

  /// Perspective projection of a camera-frame point; nullopt behind the camera.
  std::optional<Vec2> project_camera(const Vec3& camera) const;
  std::optional<Vec2> project(const Vec3& world) const {
    return project_camera(world_to_camera(world));
  }

  /// Pinhole inverse: pixel (u, v) at camera-frame depth d, returned in world.
  Vec3 backproject(double u, double v, double depth) const;
};

/// Camera with blank image and depth rasters of the given size.
CameraView make_camera(std::string view_id, const Mat3& K, const Mat3& R, const Vec3& T,
                       int width, int height);

Mat3 intrinsics(double focal, double cx, double cy);

/// Throws ValidationError (naming the view) on any violated invariant:
/// orthonormal R with det +1, positive focal length, principal point inside the
/// raster, K(0,0) == K(1,1), K's last row (0,0,1), image/depth sizes equal.
void validate(const CameraView& view);

bool is_rotation(const Mat3& R, double tolerance = 1e-6);

}  // namespace mvedit
