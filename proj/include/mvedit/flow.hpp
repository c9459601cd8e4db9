#pragma once

#include <filesystem>

#include "mvedit/camera.hpp"
#include "mvedit/raster.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

/// Dense per-pixel displacement (u right, v down) with a validity mask.
/// Invalid pixels always carry u = v = 0.
struct FlowField {
  Raster<float> u;
  Raster<float> v;
  Mask valid;

  /// A pixel "moves" when its flow magnitude exceeds this many pixels.
  static constexpr double kNonZeroThreshold = 1e-6;

  FlowField() = default;
  FlowField(int width, int height) : u(width, height), v(width, height), valid(width, height) {}

  int width() const noexcept { return valid.width(); }
  int height() const noexcept { return valid.height(); }

  bool is_valid(int x, int y) const noexcept { return valid.at(x, y) != 0; }
  Vec2 at(int x, int y) const noexcept { return {u.at(x, y), v.at(x, y)}; }
  double magnitude(int x, int y) const noexcept;
  bool moves(int x, int y) const noexcept {
    return is_valid(x, y) && magnitude(x, y) > kNonZeroThreshold;
  }

  void set(int x, int y, double du, double dv) noexcept {
    u.at(x, y) = static_cast<float>(du);
    v.at(x, y) = static_cast<float>(dv);
    valid.at(x, y) = 1;
  }
  void clear(int x, int y) noexcept {
    u.at(x, y) = 0.0f;
    v.at(x, y) = 0.0f;
    valid.at(x, y) = 0;
  }

  /// Pixels whose flow is valid and non-zero.
  Mask moving_mask() const;

  bool operator==(const FlowField&) const = default;
};

/// Throws InvalidArgument on mismatched rasters, NaN/Inf, or non-zero invalid pixels.
void validate(const FlowField& flow);

struct OcclusionMask {
  Mask revealed;  // footprint pixels the object vacates
  Mask covered;   // pixels the moved object newly occupies
};

template <typename Pixel>
struct SplatResult {
  Raster<Pixel> image;
  Mask footprint;
};

struct ProjectionOptions {
  /// Candidates within this relative depth of the nearest one count as the
  /// same surface; among them the splat nearest the pixel center wins.
  double depth_band = 0.03;
  /// Morphological closing radius that turns splat hits into the footprint.
  int closing_radius = 1;
  bool densify = true;
};

/// Flow induced in `view` by moving each point of `original` to the matching
/// point of `moved`, anchored at the pixel where the original point projects.
FlowField project_flow(const ObjectPoints& original, const ObjectPoints& moved,
                       const CameraView& view, const ProjectionOptions& options = {});

/// warp(I)(x) = I(x + f(x)), bilinear, border-clamped; invalid pixels copy I(x).
ImageD backward_warp(const ImageD& image, const FlowField& flow);
RgbImage backward_warp(const RgbImage& image, const FlowField& flow);

/// Writes each valid source pixel at round(x + f(x)); collisions keep the
/// largest flow magnitude, then the lowest source index.
SplatResult<std::uint8_t> forward_splat(const RgbImage& image, const FlowField& flow);
SplatResult<double> forward_splat(const ImageD& image, const FlowField& flow);

/// Pixels that a footprint vacates / newly covers under the flow.
OcclusionMask occlusion_mask(const FlowField& flow, const Mask& footprint);

/// Middlebury color-wheel rendering: hue = direction, saturation = magnitude
/// normalized by the field maximum, invalid pixels black.
RgbImage colorize_flow(const FlowField& flow);

/// Middlebury .flo with a "<stem>.valid.png" sidecar validity mask.
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);
std::filesystem::path validity_sidecar(const std::filesystem::path& flo_path);

inline constexpr float kFloMagic = 202021.25f;

namespace serial {

// Single-threaded reference versions of the OpenMP kernels. They define the
// expected output bit for bit and are what the parity tests compare against.
FlowField project_flow(const ObjectPoints& original, const ObjectPoints& moved,
                       const CameraView& view, const ProjectionOptions& options = {});
ImageD backward_warp(const ImageD& image, const FlowField& flow);
SplatResult<double> forward_splat(const ImageD& image, const FlowField& flow);

}  // namespace serial

}  // namespace mvedit
