#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvedit/camera.hpp"

namespace mvedit {

using SegmentLabel = std::int64_t;

struct SegmentedPointCloud {
  std::vector<Vec3> positions;
  std::vector<SegmentLabel> labels;
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty or one per point

  std::size_t size() const noexcept { return positions.size(); }
};

/// The selected object's points (P_o); the kinematic estimators return the
/// moved points (P_m) in the same shape.
struct ObjectPoints {
  std::vector<Vec3> points;
  SegmentLabel source_label = 0;
};

struct SceneMeta {
  std::string name;
  std::string world_unit = "meters";
};

struct Scene {
  std::vector<CameraView> views;
  SegmentedPointCloud cloud;
  SceneMeta meta;

  /// Throws NotFound for an unknown id.
  const CameraView& view(const std::string& view_id) const;
  std::size_t view_index(const std::string& view_id) const;
  std::vector<SegmentLabel> distinct_labels() const;
};

void validate(const SegmentedPointCloud& cloud);
void validate(const Scene& scene);

/// Scene directory layout:
///   scene.json              {"name", "world_unit"}   (optional)
///   cameras.json            [{view_id, K[9], R[9], T[3], width, height}]
///   <view_id>.png           8-bit RGB
///   <view_id>.depth.png     16-bit millimetres
///   cloud.ply               x,y,z [red,green,blue] [label]
///   labels.txt              one label per point (when the PLY has none)
Scene load_scene(const std::filesystem::path& root);

enum class PlyEncoding { Ascii, BinaryLittleEndian, BinaryBigEndian };

struct SceneWriteOptions {
  PlyEncoding ply_encoding = PlyEncoding::BinaryLittleEndian;
  bool labels_in_ply = false;  // otherwise labels.txt sidecar
};

void write_scene(const Scene& scene, const std::filesystem::path& root,
                 const SceneWriteOptions& options = {});

/// Points of the cloud carrying `label`, in cloud order. NotFound when the
/// label is absent, DegenerateSelection when fewer than 3 points match.
ObjectPoints select_object(const Scene& scene, SegmentLabel label);
ObjectPoints select_object(const SegmentedPointCloud& cloud, SegmentLabel label);

namespace io {

struct PlyCloud {
  std::vector<Vec3> positions;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<SegmentLabel> labels;  // empty if the file has no label property
};

PlyCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const SegmentedPointCloud& cloud,
               PlyEncoding encoding, bool include_labels);

std::vector<SegmentLabel> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<SegmentLabel>& labels);

}  // namespace io

}  // namespace mvedit
