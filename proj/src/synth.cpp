// Analytic ray caster for the synthetic oracle scene. Nothing here goes
// through the flow engine: projection of moved points uses the camera model
// directly and moved images are rendered by casting rays against the moved box.

#include "mvedit/synth.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

namespace mvedit {

AffineMotion AffineMotion::rotation_z_about(const Vec3& center, double angle_deg) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  AffineMotion m;
  m.A = Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
  m.b = center - m.A * center;
  return m;
}

AffineMotion AffineMotion::translation(const Vec3& offset) {
  AffineMotion m;
  m.b = offset;
  return m;
}

AffineMotion AffineMotion::scaling_about(const Vec3& center, double factor) {
  AffineMotion m;
  m.A = factor * Mat3::Identity();
  m.b = center - factor * center;
  return m;
}

void validate(const SynthConfig& c) {
  auto bad = [](const std::string& what) { fail(ErrorKind::Validation, "synth config: " + what); };
  if (c.views < 2) bad("views must be >= 2");
  if (c.width < 8 || c.height < 8) bad("image must be at least 8x8");
  if (!(c.fov_deg > 1.0 && c.fov_deg < 170.0)) bad("fov_deg must lie in (1, 170)");
  if (!(c.camera_radius > 0.0)) bad("camera_radius must be positive");
  if (!(c.box_half.minCoeff() > 0.0)) bad("box half extents must be positive");
  if (!(c.floor_half > 0.0)) bad("floor_half must be positive");
  if (c.floor_stride < 1) bad("floor_stride must be >= 1");
  if (c.object_label < 0 || c.floor_label < 0 || c.object_label == c.floor_label) {
    bad("labels must be distinct non-negative integers");
  }
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) fail(ErrorKind::Validation, "synth config must be a JSON object");
    auto vec3 = [](const nlohmann::json& v) {
      const auto a = v.get<std::vector<double>>();
      if (a.size() != 3) fail(ErrorKind::Validation, "synth config: expected a 3-vector");
      return Vec3(a[0], a[1], a[2]);
    };
    for (const auto& item : j.items()) {
      const auto& k = item.key();
      const auto& v = item.value();
      if (k == "name") c.name = v.get<std::string>();
      else if (k == "views") c.views = v.get<int>();
      else if (k == "width") c.width = v.get<int>();
      else if (k == "height") c.height = v.get<int>();
      else if (k == "fov_deg") c.fov_deg = v.get<double>();
      else if (k == "camera_radius") c.camera_radius = v.get<double>();
      else if (k == "camera_height") c.camera_height = v.get<double>();
      else if (k == "azimuth_step_deg") c.azimuth_step_deg = v.get<double>();
      else if (k == "box_center") c.box_center = vec3(v);
      else if (k == "box_half") c.box_half = vec3(v);
      else if (k == "floor_half") c.floor_half = v.get<double>();
      else if (k == "object_label") c.object_label = v.get<SegmentLabel>();
      else if (k == "floor_label") c.floor_label = v.get<SegmentLabel>();
      else if (k == "floor_stride") c.floor_stride = v.get<int>();
      else if (k == "max_cloud_points") c.max_cloud_points = v.get<std::size_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "ground_truth") continue;  // handled by the CLI
      else fail(ErrorKind::Validation, "synth config: unknown key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("synth config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string to_json(const SynthConfig& c) {
  auto vec3 = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  return nlohmann::json{{"name", c.name},
                        {"views", c.views},
                        {"width", c.width},
                        {"height", c.height},
                        {"fov_deg", c.fov_deg},
                        {"camera_radius", c.camera_radius},
                        {"camera_height", c.camera_height},
                        {"azimuth_step_deg", c.azimuth_step_deg},
                        {"box_center", vec3(c.box_center)},
                        {"box_half", vec3(c.box_half)},
                        {"floor_half", c.floor_half},
                        {"object_label", c.object_label},
                        {"floor_label", c.floor_label},
                        {"floor_stride", c.floor_stride},
                        {"max_cloud_points", c.max_cloud_points},
                        {"seed", c.seed}}
      .dump(2);
}

std::optional<AffineMotion> ground_truth_motion(const std::string& config_text, const SyntheticScene& synth) {
  try {
    const auto j = nlohmann::json::parse(config_text);
    if (!j.is_object() || !j.contains("ground_truth")) return std::nullopt;
    const auto& g = j.at("ground_truth");
    if (!g.is_object() || g.size() != 1) {
      fail(ErrorKind::Validation, "ground_truth needs exactly one of rotation_z_deg, translation, scale");
    }
    if (g.contains("rotation_z_deg")) {
      return AffineMotion::rotation_z_about(synth.object_centroid(), g.at("rotation_z_deg").get<double>());
    }
    if (g.contains("translation")) {
      const auto t = g.at("translation").get<std::vector<double>>();
      if (t.size() != 3) fail(ErrorKind::Validation, "ground_truth translation must be a 3-vector");
      return AffineMotion::translation(Vec3(t[0], t[1], t[2]));
    }
    if (g.contains("scale")) {
      const double s = g.at("scale").get<double>();
      if (!(s > 0.0)) fail(ErrorKind::Validation, "ground_truth scale must be > 0");
      return AffineMotion::scaling_about(synth.object_centroid(), s);
    }
    fail(ErrorKind::Validation, "ground_truth: unknown motion '" + g.begin().key() + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("synth config: ") + e.what());
  }
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice(std::int64_t i, std::int64_t j, std::int64_t k, std::uint64_t seed) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(i));
  h = splitmix(h ^ static_cast<std::uint64_t>(j));
  h = splitmix(h ^ static_cast<std::uint64_t>(k));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(const Vec3& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy), iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) * (dz ? tz : 1.0 - tz);
    acc += w * lattice(ix + dx, iy + dy, iz + dz, seed);
  }
  return acc;
}

double fbm(const Vec3& p, std::uint64_t seed) {
  static constexpr double kFreq[4] = {3.0, 7.0, 13.0, 29.0};
  static constexpr double kAmp[4] = {0.4, 0.3, 0.2, 0.1};
  double v = 0.0;
  for (int o = 0; o < 4; ++o) v += kAmp[o] * value_noise(p * kFreq[o], seed * 16 + o);
  return v;
}

std::uint8_t to8(double v) { return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5)); }

constexpr std::array<std::array<double, 3>, 6> kFaceBase{{{0.85, 0.35, 0.30},
                                                          {0.30, 0.75, 0.35},
                                                          {0.30, 0.40, 0.85},
                                                          {0.85, 0.80, 0.30},
                                                          {0.75, 0.35, 0.80},
                                                          {0.35, 0.80, 0.80}}};
constexpr std::array<double, 3> kSky{0.70, 0.78, 0.90};

enum class Surface { None, Floor, Box };

}  // namespace

struct SyntheticScene::Hit {
  Surface surface = Surface::None;
  double t = std::numeric_limits<double>::infinity();
  Vec3 world = Vec3::Zero();  // hit point, moved frame
  Vec3 local = Vec3::Zero();  // hit point in the unmoved box frame
  int face = 0;               // 2 * axis + (positive side)
};

SyntheticScene::Hit SyntheticScene::cast(const CameraView& view, double u, double v,
                                         const AffineMotion& motion) const {
  const Vec3 origin = -view.R.transpose() * view.T;
  const Vec3 camera_dir((u - view.K(0, 2)) / view.K(0, 0), (v - view.K(1, 2)) / view.K(1, 1), 1.0);
  const Vec3 dir = view.R.transpose() * camera_dir;
  Hit hit;

  if (dir.z() < 0.0) {
    const double t = -origin.z() / dir.z();
    const Vec3 p = origin + t * dir;
    if (t > 0.0 && std::abs(p.x()) <= config_.floor_half && std::abs(p.y()) <= config_.floor_half) {
      hit.surface = Surface::Floor;
      hit.t = t;
      hit.world = p;
      hit.local = p;
    }
  }

  // Box: intersect the ray mapped back through the motion.
  const Mat3 inv = motion.A.inverse();
  const Vec3 o = inv * (origin - motion.b);
  const Vec3 d = inv * dir;
  const Vec3 lo = config_.box_center - config_.box_half;
  const Vec3 hi = config_.box_center + config_.box_half;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_face = 0;
  bool miss = false;
  for (int a = 0; a < 3 && !miss; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) miss = true;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    int face = 2 * a;  // entering through the low side
    if (t0 > t1) {
      std::swap(t0, t1);
      face = 2 * a + 1;
    }
    if (t0 > t_near) {
      t_near = t0;
      near_face = face;
    }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) miss = true;
  }
  if (!miss && t_near > 1e-9 && t_near < hit.t) {
    hit.surface = Surface::Box;
    hit.t = t_near;
    hit.world = origin + t_near * dir;
    hit.local = o + t_near * d;
    hit.face = near_face;
  }
  return hit;
}

SyntheticScene::SyntheticScene(SynthConfig config) : config_(std::move(config)) {
  validate(config_);
  scene_.meta.name = config_.name;
  const double focal = 0.5 * config_.width / std::tan(0.5 * config_.fov_deg * std::numbers::pi / 180.0);
  const Mat3 K = intrinsics(focal, 0.5 * (config_.width - 1), 0.5 * (config_.height - 1));
  const Vec3 target = config_.box_center;
  for (int i = 0; i < config_.views; ++i) {
    const double az = (i - 0.5 * (config_.views - 1)) * config_.azimuth_step_deg * std::numbers::pi / 180.0;
    const Vec3 center(target.x() + config_.camera_radius * std::cos(az),
                      target.y() + config_.camera_radius * std::sin(az), config_.camera_height);
    const Vec3 forward = (target - center).normalized();
    const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
    const Vec3 down = forward.cross(right);
    Mat3 R;
    R.row(0) = right;
    R.row(1) = down;
    R.row(2) = forward;
    scene_.views.push_back(make_camera("view" + std::to_string(i), K, R, -R * center, config_.width, config_.height));
  }

  for (auto& view : scene_.views) {
    view.image = render(view);
    const int h = config_.height;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < config_.width; ++x) {
        const Hit hit = cast(view, x, y, {});
        view.depth.at(x, y) = hit.surface == Surface::None ? 0.0 : view.world_to_camera(hit.world).z();
      }
    }
    for (int y = 0; y < config_.height; ++y) {
      for (int x = 0; x < config_.width; ++x) {
        const Hit hit = cast(view, x, y, {});
        const bool keep = hit.surface == Surface::Box ||
                          (hit.surface == Surface::Floor && x % config_.floor_stride == 0 &&
                           y % config_.floor_stride == 0);
        if (!keep) continue;
        scene_.cloud.positions.push_back(hit.world);
        scene_.cloud.labels.push_back(hit.surface == Surface::Box ? config_.object_label : config_.floor_label);
        scene_.cloud.colors.push_back({view.image.at(x, y, 0), view.image.at(x, y, 1), view.image.at(x, y, 2)});
      }
    }
  }
  auto& cloud = scene_.cloud;
  const std::size_t total = cloud.size();
  if (config_.max_cloud_points > 0 && total > config_.max_cloud_points) {
    SegmentedPointCloud thin;
    for (std::size_t k = 0; k < config_.max_cloud_points; ++k) {
      const std::size_t i = k * total / config_.max_cloud_points;
      thin.positions.push_back(cloud.positions[i]);
      thin.labels.push_back(cloud.labels[i]);
      thin.colors.push_back(cloud.colors[i]);
    }
    cloud = std::move(thin);
  }
  validate(scene_);
}

RgbImage SyntheticScene::render(const CameraView& view, const AffineMotion& motion) const {
  RgbImage image(view.width(), view.height(), 3);
  const int h = view.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < view.width(); ++x) {
      const Hit hit = cast(view, x, y, motion);
      std::array<double, 3> rgb = kSky;
      if (hit.surface == Surface::Floor) {
        const bool checker = (static_cast<int>(std::floor(hit.local.x() * 2.0)) +
                              static_cast<int>(std::floor(hit.local.y() * 2.0))) % 2 == 0;
        for (int c = 0; c < 3; ++c) {
          const double n = fbm(hit.local, config_.seed * 8 + 100 + c);
          rgb[c] = (checker ? 0.55 : 0.45) * (0.4 + 0.9 * n);
        }
      } else if (hit.surface == Surface::Box) {
        for (int c = 0; c < 3; ++c) {
          const double n = fbm(hit.local, config_.seed * 8 + c);
          rgb[c] = kFaceBase[hit.face][c] * (0.25 + 1.1 * n);
        }
      }
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = to8(rgb[c]);
    }
  }
  return image;
}

Mask SyntheticScene::object_mask(const CameraView& view) const {
  Mask mask(view.width(), view.height());
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) mask.at(x, y) = cast(view, x, y, {}).surface == Surface::Box ? 1 : 0;
  }
  return mask;
}

FlowField SyntheticScene::ground_truth_flow(const CameraView& view, const AffineMotion& motion) const {
  FlowField flow(view.width(), view.height());
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      const Hit hit = cast(view, x, y, {});
      if (hit.surface != Surface::Box) continue;
      const Vec3 cam = view.R * motion.apply(hit.world) + view.T;
      if (!(cam.z() > kMinProjectionDepth)) continue;
      const Vec3 h = view.K * cam;
      flow.set(x, y, h.x() / h.z() - x, h.y() / h.z() - y);
    }
  }
  return flow;
}

Vec3 SyntheticScene::object_centroid() const {
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < scene_.cloud.size(); ++i) {
    if (scene_.cloud.labels[i] != config_.object_label) continue;
    sum += scene_.cloud.positions[i];
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace mvedit
