#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mvedit/kinematics.hpp"

namespace mvedit {

enum class MotionMode { Translation, Scaling, Rotation, Stretching };
enum class ScaleMode { Shrink, Enlarge };

std::string_view to_string(MotionMode mode) noexcept;

/// A drag starting at (x, y) on the reference view, moving by (dx, dy).
struct DragVector {
  double x = 0.0;
  double y = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

struct MotionSpec {
  MotionMode mode = MotionMode::Rotation;
  std::string reference_view;

  std::vector<DragVector> drag;            // translation, scaling, stretching
  double brush_radius = 64.0;              // pixels
  std::optional<bool> feather;             // default: off for translation, on otherwise
  std::optional<double> angle_deg;         // rotation
  std::optional<ScaleMode> scale_mode;     // scaling
  ScaleAnchor scale_anchor = ScaleAnchor::Origin;
  std::optional<Vec2> center;              // enlarge; default footprint centroid
  std::optional<std::array<Vec2, 2>> stretch_line;  // stretching, pixels
  bool clamp_stretch = false;

  bool feathered() const { return feather.value_or(mode != MotionMode::Translation); }
};

/// Schema check: exactly the mode's fields, finite values, angle in (-360, 360).
/// Throws Validation.
void validate(const MotionSpec& spec);

MotionSpec motion_spec_from_json(const std::string& text);
std::string to_json(const MotionSpec& spec);
MotionSpec load_motion_spec(const std::filesystem::path& path);

/// Pixels of `view` where the object is the visible surface.
Mask object_footprint(const ObjectPoints& object, const CameraView& view);

/// Paints every drag onto the footprint pixels within the brush radius of its
/// start, linearly fading to zero at the radius when feathered. The drag with
/// the largest weight wins a pixel (first drag on ties). Footprint pixels are
/// valid; painted ones move.
FlowField rasterize_drags(const Mask& footprint, const std::vector<DragVector>& drags,
                          double brush_radius, bool feather);

struct DerivedMotion {
  MotionMode mode = MotionMode::Rotation;
  std::optional<Vec3> offset;         // translation p_off
  std::optional<double> scale;        // s_f
  std::optional<double> angle_deg;    // phi
  std::optional<PlaneCoeffs> plane;   // stretching
  std::optional<Vec3> stretch_offset; // dominant sparse offset
  Vec3 centroid = Vec3::Zero();
  std::size_t object_points = 0;
  std::size_t sparse_points = 0;
};

struct MotionResult {
  ObjectPoints original;
  ObjectPoints moved;
  FlowField sparse_flow;  // f_s on the reference view
  Mask reference_footprint;
  std::vector<FlowField> flows;  // per view, scene order
  std::vector<bool> visible;
  DerivedMotion derived;
};

/// Full flow estimation for one object and motion prior.
MotionResult estimate_motion(const Scene& scene, SegmentLabel label, const MotionSpec& spec,
                             const ProjectionOptions& projection = {});

/// Manifest payload: resolved spec, derived quantities, visibility.
std::string derived_json(const MotionSpec& spec, const MotionResult& result, const Scene& scene);

}  // namespace mvedit
