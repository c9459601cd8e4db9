#include "mvedit/camera.hpp"

#include <Eigen/LU>
#include <cmath>

namespace mvedit {

std::optional<Vec2> CameraView::project_camera(const Vec3& camera) const {
  if (!(camera.z() > kMinProjectionDepth)) return std::nullopt;
  const Vec3 h = K * camera;
  return Vec2(h.x() / h.z(), h.y() / h.z());
}

Vec3 CameraView::backproject(double u, double v, double depth) const {
  const double f = focal();
  const Vec2 pp = principal_point();
  const Vec3 camera((u - pp.x()) * depth / f, (v - pp.y()) * depth / f, depth);
  return camera_to_world(camera);
}

CameraView make_camera(std::string view_id, const Mat3& K, const Mat3& R, const Vec3& T,
                       int width, int height) {
  CameraView view;
  view.view_id = std::move(view_id);
  view.K = K;
  view.R = R;
  view.T = T;
  view.image = RgbImage(width, height, 3);
  view.depth = DepthMap(width, height);
  return view;
}

Mat3 intrinsics(double focal, double cx, double cy) {
  Mat3 K;
  K << focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0;
  return K;
}

bool is_rotation(const Mat3& R, double tolerance) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tolerance && std::abs(R.determinant() - 1.0) <= tolerance;
}

void validate(const CameraView& view) {
  const std::string who = "view " + view.view_id + ": ";
  if (!view.K.allFinite() || !view.T.allFinite()) fail(ErrorKind::Validation, who + "non-finite camera matrix");
  if (!is_rotation(view.R)) fail(ErrorKind::Validation, who + "R not orthonormal");
  const double f = view.focal();
  if (!(f > 0.0)) fail(ErrorKind::Validation, who + "focal length must be positive");
  if (std::abs(view.K(1, 1) - f) > 1e-9 * f) fail(ErrorKind::Validation, who + "K(1,1) differs from focal length");
  if (view.K(2, 0) != 0.0 || view.K(2, 1) != 0.0 || view.K(2, 2) != 1.0) {
    fail(ErrorKind::Validation, who + "K last row must be (0,0,1)");
  }
  if (view.image.channels() != 3) fail(ErrorKind::Validation, who + "image must be RGB");
  if (view.image.width() != view.depth.width() || view.image.height() != view.depth.height()) {
    fail(ErrorKind::Validation, who + "image and depth dimensions differ");
  }
  const Vec2 pp = view.principal_point();
  if (!(pp.x() >= 0.0 && pp.x() < view.width() && pp.y() >= 0.0 && pp.y() < view.height())) {
    fail(ErrorKind::Validation, who + "principal point outside the image");
  }
}

}  // namespace mvedit
