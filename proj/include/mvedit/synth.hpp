#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mvedit/flow.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

/// A textured box resting on a textured floor (world Z up), seen by cameras
/// on an arc around the box, all looking at its centre.
struct SynthConfig {
  std::string name = "synthetic-cuboid";
  int views = 4;
  int width = 512;
  int height = 512;
  double fov_deg = 50.0;
  double camera_radius = 4.0;     // horizontal distance to the box centre
  double camera_height = 2.0;
  double azimuth_step_deg = 20.0; // arc centred on azimuth 0
  Vec3 box_center{0.0, 0.0, 0.5};
  Vec3 box_half{0.5, 0.35, 0.5};
  double floor_half = 6.0;
  SegmentLabel object_label = 8;
  SegmentLabel floor_label = 0;
  int floor_stride = 4;  // floor pixels kept in the cloud, per axis
  std::size_t max_cloud_points = 0;  // 0 keeps all; else evenly thinned to this many
  std::uint64_t seed = 0;
};

/// x' = A x + b, applied to the box only.
struct AffineMotion {
  Mat3 A = Mat3::Identity();
  Vec3 b = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return A * x + b; }
  static AffineMotion rotation_z_about(const Vec3& center, double angle_deg);
  static AffineMotion translation(const Vec3& offset);
  static AffineMotion scaling_about(const Vec3& center, double factor);
};

void validate(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);
std::string to_json(const SynthConfig& config);

class SyntheticScene {
 public:
  explicit SyntheticScene(SynthConfig config);

  const SynthConfig& config() const noexcept { return config_; }
  const Scene& scene() const noexcept { return scene_; }

  /// Renders `view` with the box moved by `motion`.
  RgbImage render(const CameraView& view, const AffineMotion& motion = {}) const;

  /// Box pixels of the unmoved scene.
  Mask object_mask(const CameraView& view) const;

  /// pi(A X + b) - p at every pixel whose ray first hits the box at X.
  FlowField ground_truth_flow(const CameraView& view, const AffineMotion& motion) const;

  /// Centroid of the box points in the generated cloud.
  Vec3 object_centroid() const;

 private:
  struct Hit;
  Hit cast(const CameraView& view, double u, double v, const AffineMotion& motion) const;

  SynthConfig config_;
  Scene scene_;
};

/// Optional "ground_truth" block of a synth config: exactly one of
/// {"rotation_z_deg": a}, {"translation": [x, y, z]}, {"scale": s}. Rotation
/// and scaling pivot on object_centroid(). nullopt when the block is absent.
std::optional<AffineMotion> ground_truth_motion(const std::string& config_text, const SyntheticScene& synth);

}  // namespace mvedit
