#include "mvedit/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mvedit/io/png.hpp"

namespace mvedit {
namespace fs = std::filesystem;
using nlohmann::json;

const CameraView& Scene::view(const std::string& view_id) const {
  return views[view_index(view_id)];
}

std::size_t Scene::view_index(const std::string& view_id) const {
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].view_id == view_id) return i;
  }
  fail(ErrorKind::NotFound, "view " + view_id);
}

std::vector<SegmentLabel> Scene::distinct_labels() const {
  std::set<SegmentLabel> labels(cloud.labels.begin(), cloud.labels.end());
  return {labels.begin(), labels.end()};
}

void validate(const SegmentedPointCloud& cloud) {
  if (cloud.positions.empty()) fail(ErrorKind::Validation, "point cloud is empty");
  if (cloud.labels.size() != cloud.positions.size()) {
    fail(ErrorKind::Validation, "label count " + std::to_string(cloud.labels.size()) +
                                    " != point count " + std::to_string(cloud.positions.size()));
  }
  if (!cloud.colors.empty() && cloud.colors.size() != cloud.positions.size()) {
    fail(ErrorKind::Validation, "color count differs from point count");
  }
  for (const auto& p : cloud.positions) {
    if (!p.allFinite()) fail(ErrorKind::Validation, "point cloud contains NaN/Inf");
  }
  for (auto label : cloud.labels) {
    if (label < 0) fail(ErrorKind::Validation, "segment labels must be non-negative");
  }
}

void validate(const Scene& scene) {
  if (scene.views.size() < 2) fail(ErrorKind::Validation, "a scene needs at least 2 views");
  if (scene.meta.world_unit != "meters") {
    fail(ErrorKind::Validation, "unsupported world unit '" + scene.meta.world_unit + "'");
  }
  std::set<std::string> ids;
  for (const auto& view : scene.views) {
    validate(view);
    if (!ids.insert(view.view_id).second) fail(ErrorKind::Validation, "duplicate view id " + view.view_id);
  }
  validate(scene.cloud);
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, path.filename().string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path.filename().string() + ": " + e.what());
  }
}

Mat3 matrix_from(const json& entry, const char* key, const std::string& view_id) {
  const auto it = entry.find(key);
  if (it == entry.end() || !it->is_array() || it->size() != 9) {
    fail(ErrorKind::Validation, "view " + view_id + ": " + key + " must be 9 numbers");
  }
  Mat3 m;
  for (int i = 0; i < 9; ++i) {
    if (!(*it)[i].is_number()) fail(ErrorKind::Validation, "view " + view_id + ": malformed " + key);
    m(i / 3, i % 3) = (*it)[i].get<double>();
  }
  return m;
}

json matrix_to_json(const Mat3& m) {
  json out = json::array();
  for (int i = 0; i < 9; ++i) out.push_back(m(i / 3, i % 3));
  return out;
}

fs::path image_path(const fs::path& root, const std::string& id) { return root / (id + ".png"); }
fs::path depth_path(const fs::path& root, const std::string& id) { return root / (id + ".depth.png"); }

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) fail(ErrorKind::NotFound, what);
}

}  // namespace

Scene load_scene(const fs::path& root) {
  if (!fs::is_directory(root)) fail(ErrorKind::NotFound, root.string());
  Scene scene;
  scene.meta.name = root.filename().string();
  if (fs::exists(root / "scene.json")) {
    const json meta = read_json(root / "scene.json");
    scene.meta.name = meta.value("name", scene.meta.name);
    scene.meta.world_unit = meta.value("world_unit", scene.meta.world_unit);
  }

  const json cameras = read_json(root / "cameras.json");
  if (!cameras.is_array()) fail(ErrorKind::Validation, "cameras.json must be an array");
  for (const auto& entry : cameras) {
    if (!entry.is_object() || !entry.contains("view_id")) {
      fail(ErrorKind::Validation, "cameras.json entry without view_id");
    }
    const std::string id = entry["view_id"].is_string() ? entry["view_id"].get<std::string>()
                                                        : entry["view_id"].dump();
    CameraView view;
    view.view_id = id;
    view.K = matrix_from(entry, "K", id);
    view.R = matrix_from(entry, "R", id);
    const auto t = entry.find("T");
    if (t == entry.end() || !t->is_array() || t->size() != 3) {
      fail(ErrorKind::Validation, "view " + id + ": T must be 3 numbers");
    }
    for (int i = 0; i < 3; ++i) view.T[i] = (*t)[i].get<double>();
    const int width = entry.value("width", -1);
    const int height = entry.value("height", -1);

    require_file(image_path(root, id), id + ".image");
    require_file(depth_path(root, id), id + ".depth");
    view.image = io::read_png_rgb(image_path(root, id));
    view.depth = io::read_depth_png(depth_path(root, id));
    if (view.image.width() != width || view.image.height() != height) {
      fail(ErrorKind::Validation, "view " + id + ": image size differs from cameras.json");
    }
    scene.views.push_back(std::move(view));
  }

  require_file(root / "cloud.ply", "cloud.ply");
  auto ply = io::read_ply(root / "cloud.ply");
  scene.cloud.positions = std::move(ply.positions);
  scene.cloud.colors = std::move(ply.colors);
  if (!ply.labels.empty()) {
    scene.cloud.labels = std::move(ply.labels);
  } else {
    require_file(root / "labels.txt", "labels.txt");
    scene.cloud.labels = io::read_labels(root / "labels.txt");
  }
  validate(scene);
  return scene;
}

void write_scene(const Scene& scene, const fs::path& root, const SceneWriteOptions& options) {
  fs::create_directories(root);
  {
    std::ofstream meta(root / "scene.json");
    meta << json{{"name", scene.meta.name}, {"world_unit", scene.meta.world_unit}}.dump(2) << '\n';
  }
  json cameras = json::array();
  for (const auto& view : scene.views) {
    cameras.push_back({{"view_id", view.view_id},
                       {"K", matrix_to_json(view.K)},
                       {"R", matrix_to_json(view.R)},
                       {"T", {view.T.x(), view.T.y(), view.T.z()}},
                       {"width", view.width()},
                       {"height", view.height()}});
    io::write_png_rgb(image_path(root, view.view_id), view.image);
    io::write_depth_png(depth_path(root, view.view_id), view.depth);
  }
  {
    std::ofstream out(root / "cameras.json");
    out << cameras.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, "cannot write cameras.json");
  }
  io::write_ply(root / "cloud.ply", scene.cloud, options.ply_encoding, options.labels_in_ply);
  if (!options.labels_in_ply) io::write_labels(root / "labels.txt", scene.cloud.labels);
}

ObjectPoints select_object(const SegmentedPointCloud& cloud, SegmentLabel label) {
  ObjectPoints object;
  object.source_label = label;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.labels[i] == label) object.points.push_back(cloud.positions[i]);
  }
  if (object.points.empty()) fail(ErrorKind::NotFound, "segment label " + std::to_string(label));
  if (object.points.size() < 3) {
    fail(ErrorKind::DegenerateSelection, "segment label " + std::to_string(label) + " has only " +
                                             std::to_string(object.points.size()) + " points");
  }
  return object;
}

ObjectPoints select_object(const Scene& scene, SegmentLabel label) {
  return select_object(scene.cloud, label);
}

}  // namespace mvedit
