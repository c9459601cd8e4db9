#include "mvedit/motion.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mvedit {

using nlohmann::json;

std::string_view to_string(MotionMode mode) noexcept {
  switch (mode) {
    case MotionMode::Translation: return "translation";
    case MotionMode::Scaling: return "scaling";
    case MotionMode::Rotation: return "rotation";
    case MotionMode::Stretching: return "stretching";
  }
  return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorKind::Validation, "motion spec: " + what); }

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

void validate(const MotionSpec& s) {
  const bool uses_drag = s.mode != MotionMode::Rotation;
  if (s.reference_view.empty()) invalid("reference_view is required");
  if (uses_drag && s.drag.empty()) invalid("mode '" + std::string(to_string(s.mode)) + "' needs drag vectors");
  if (!uses_drag && !s.drag.empty()) invalid("rotation takes no drag vectors");
  if (!uses_drag && s.feather) invalid("rotation takes no feather flag");
  for (const auto& d : s.drag) {
    if (!std::isfinite(d.x) || !std::isfinite(d.y) || !std::isfinite(d.dx) || !std::isfinite(d.dy)) {
      invalid("drag values must be finite");
    }
  }
  if (!(s.brush_radius > 0.0) || !std::isfinite(s.brush_radius)) invalid("brush_radius must be positive");

  if (s.mode == MotionMode::Rotation) {
    if (!s.angle_deg) invalid("rotation needs angle_deg");
    if (!std::isfinite(*s.angle_deg) || !(*s.angle_deg > -360.0 && *s.angle_deg < 360.0)) {
      invalid("angle_deg must lie in (-360, 360)");
    }
  } else if (s.angle_deg) {
    invalid("angle_deg is only valid for rotation");
  }

  if (s.mode == MotionMode::Scaling) {
    if (!s.scale_mode) invalid("scaling needs scale_mode");
    if (s.center && *s.scale_mode != ScaleMode::Enlarge) invalid("center is only valid when enlarging");
    if (s.center && !finite(*s.center)) invalid("center must be finite");
  } else {
    if (s.scale_mode) invalid("scale_mode is only valid for scaling");
    if (s.center) invalid("center is only valid for scaling");
    if (s.scale_anchor != ScaleAnchor::Origin) invalid("scale_anchor is only valid for scaling");
  }

  if (s.mode == MotionMode::Stretching) {
    if (!s.stretch_line) invalid("stretching needs stretch_line");
    if (!finite((*s.stretch_line)[0]) || !finite((*s.stretch_line)[1])) invalid("stretch_line must be finite");
  } else {
    if (s.stretch_line) invalid("stretch_line is only valid for stretching");
    if (s.clamp_stretch) invalid("clamp_stretch is only valid for stretching");
  }
}

MotionSpec motion_spec_from_json(const std::string& text) {
  MotionSpec s;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) invalid("expected a JSON object");
    static const std::set<std::string> known{"mode",         "reference_view", "drag",        "brush_radius",
                                             "feather",      "angle_deg",      "scale_mode",  "scale_anchor",
                                             "center",       "stretch_line",   "clamp_stretch"};
    for (const auto& item : j.items()) {
      if (!known.contains(item.key())) invalid("unknown key '" + item.key() + "'");
    }
    if (!j.contains("mode")) invalid("mode is required");
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "translation") s.mode = MotionMode::Translation;
    else if (mode == "scaling") s.mode = MotionMode::Scaling;
    else if (mode == "rotation") s.mode = MotionMode::Rotation;
    else if (mode == "stretching") s.mode = MotionMode::Stretching;
    else invalid("unknown mode '" + mode + "'");
    if (j.contains("reference_view")) s.reference_view = j.at("reference_view").get<std::string>();
    if (j.contains("drag")) {
      for (const auto& d : j.at("drag")) {
        const auto v = d.get<std::vector<double>>();
        if (v.size() != 4) invalid("each drag is [x, y, dx, dy]");
        s.drag.push_back({v[0], v[1], v[2], v[3]});
      }
    }
    if (j.contains("brush_radius")) s.brush_radius = j.at("brush_radius").get<double>();
    if (j.contains("feather")) s.feather = j.at("feather").get<bool>();
    if (j.contains("angle_deg")) s.angle_deg = j.at("angle_deg").get<double>();
    if (j.contains("scale_mode")) {
      const auto m = j.at("scale_mode").get<std::string>();
      if (m == "shrink") s.scale_mode = ScaleMode::Shrink;
      else if (m == "enlarge") s.scale_mode = ScaleMode::Enlarge;
      else invalid("scale_mode must be shrink or enlarge");
    }
    if (j.contains("scale_anchor")) {
      const auto a = j.at("scale_anchor").get<std::string>();
      if (a == "origin") s.scale_anchor = ScaleAnchor::Origin;
      else if (a == "centroid") s.scale_anchor = ScaleAnchor::Centroid;
      else invalid("scale_anchor must be origin or centroid");
    }
    if (j.contains("center")) {
      const auto c = j.at("center").get<std::vector<double>>();
      if (c.size() != 2) invalid("center is [x, y]");
      s.center = Vec2(c[0], c[1]);
    }
    if (j.contains("stretch_line")) {
      const auto l = j.at("stretch_line").get<std::vector<std::vector<double>>>();
      if (l.size() != 2 || l[0].size() != 2 || l[1].size() != 2) invalid("stretch_line is [[x1, y1], [x2, y2]]");
      s.stretch_line = std::array<Vec2, 2>{Vec2(l[0][0], l[0][1]), Vec2(l[1][0], l[1][1])};
    }
    if (j.contains("clamp_stretch")) s.clamp_stretch = j.at("clamp_stretch").get<bool>();
  } catch (const json::exception& e) {
    invalid(e.what());
  }
  validate(s);
  return s;
}

namespace {

json spec_json(const MotionSpec& s) {
  json j = {{"mode", std::string(to_string(s.mode))}, {"reference_view", s.reference_view}};
  if (s.mode != MotionMode::Rotation) {
    json drags = json::array();
    for (const auto& d : s.drag) drags.push_back({d.x, d.y, d.dx, d.dy});
    j["drag"] = drags;
    j["brush_radius"] = s.brush_radius;
    j["feather"] = s.feathered();
  }
  if (s.angle_deg) j["angle_deg"] = *s.angle_deg;
  if (s.scale_mode) {
    j["scale_mode"] = *s.scale_mode == ScaleMode::Shrink ? "shrink" : "enlarge";
    j["scale_anchor"] = s.scale_anchor == ScaleAnchor::Origin ? "origin" : "centroid";
  }
  if (s.center) j["center"] = {s.center->x(), s.center->y()};
  if (s.stretch_line) {
    const auto& l = *s.stretch_line;
    j["stretch_line"] = {{l[0].x(), l[0].y()}, {l[1].x(), l[1].y()}};
    j["clamp_stretch"] = s.clamp_stretch;
  }
  return j;
}

}  // namespace

std::string to_json(const MotionSpec& spec) { return spec_json(spec).dump(2); }

MotionSpec load_motion_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return motion_spec_from_json(buffer.str());
}

Mask object_footprint(const ObjectPoints& object, const CameraView& view) {
  constexpr double kDepthTolerance = 0.05;
  const int w = view.width();
  const int h = view.height();
  std::vector<double> nearest(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  for (const auto& p : object.points) {
    const Vec3 cam = view.world_to_camera(p);
    const auto uv = view.project_camera(cam);
    if (!uv) continue;
    const int x = nearest_pixel(uv->x());
    const int y = nearest_pixel(uv->y());
    if (x < 0 || y < 0 || x >= w || y >= h) continue;
    double& z = nearest[static_cast<std::size_t>(y) * w + x];
    z = std::min(z, cam.z());
  }
  Mask hits(w, h);
  const bool has_depth = view.depth.width() == w && view.depth.height() == h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double z = nearest[static_cast<std::size_t>(y) * w + x];
      if (!std::isfinite(z)) continue;
      const double d = has_depth ? view.depth.at(x, y) : 0.0;
      // Hidden behind other scene geometry.
      if (d > 0.0 && z > d * (1.0 + kDepthTolerance)) continue;
      hits.at(x, y) = 1;
    }
  }
  return mask_or(hits, erode(dilate(hits, 1), 1));
}

FlowField rasterize_drags(const Mask& footprint, const std::vector<DragVector>& drags, double brush_radius,
                          bool feather) {
  FlowField flow(footprint.width(), footprint.height());
  for (int y = 0; y < footprint.height(); ++y) {
    for (int x = 0; x < footprint.width(); ++x) {
      if (!footprint.at(x, y)) continue;
      double best = 0.0;
      const DragVector* winner = nullptr;
      for (const auto& d : drags) {
        const double dist = std::hypot(x - d.x, y - d.y);
        if (dist > brush_radius) continue;
        const double weight = feather ? 1.0 - dist / brush_radius : 1.0;
        if (weight > best) {
          best = weight;
          winner = &d;
        }
      }
      if (winner != nullptr) {
        flow.set(x, y, best * winner->dx, best * winner->dy);
      } else {
        flow.set(x, y, 0.0, 0.0);
      }
    }
  }
  return flow;
}

namespace {

Vec3 lift_line_point(const CameraView& view, const Vec2& pixel) {
  const int x = nearest_pixel(pixel.x());
  const int y = nearest_pixel(pixel.y());
  if (!view.depth.contains(x, y)) invalid("stretch_line point lies outside the reference view");
  const double d = view.depth.at(x, y);
  if (!(d > 0.0)) fail(ErrorKind::InvalidDepth, "stretch_line point has no depth");
  return view.backproject(pixel.x(), pixel.y(), d);
}

Vec2 footprint_centroid(const Mask& footprint) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < footprint.height(); ++y) {
    for (int x = 0; x < footprint.width(); ++x) {
      if (!footprint.at(x, y)) continue;
      sx += x;
      sy += y;
      ++n;
    }
  }
  if (n == 0) fail(ErrorKind::EmptyProjection, "object is not visible in the reference view");
  return {sx / n, sy / n};
}

}  // namespace

MotionResult estimate_motion(const Scene& scene, SegmentLabel label, const MotionSpec& spec,
                             const ProjectionOptions& projection) {
  validate(spec);
  const CameraView& ref = scene.view(spec.reference_view);
  MotionResult r;
  r.original = select_object(scene, label);
  r.derived.mode = spec.mode;
  r.derived.centroid = centroid(r.original.points);
  r.derived.object_points = r.original.points.size();
  r.reference_footprint = object_footprint(r.original, ref);
  if (count_set(r.reference_footprint) == 0) {
    fail(ErrorKind::EmptyProjection, "object is not visible in view " + ref.view_id);
  }

  SparsePointPair pair;
  if (spec.mode != MotionMode::Rotation) {
    r.sparse_flow = rasterize_drags(r.reference_footprint, spec.drag, spec.brush_radius, spec.feathered());
  } else {
    r.sparse_flow = FlowField(ref.width(), ref.height());
  }
  auto lift = [&] {
    pair = unproject_sparse(ref, r.sparse_flow, sparse_selection(ref, r.sparse_flow));
    r.derived.sparse_points = pair.size();
  };

  switch (spec.mode) {
    case MotionMode::Translation:
      lift();
      r.derived.offset = translation_offset(pair);
      r.moved = estimate_translation(pair, r.original);
      break;
    case MotionMode::Scaling: {
      double s;
      if (*spec.scale_mode == ScaleMode::Shrink) {
        s = estimate_scale_shrink(r.sparse_flow);
      } else {
        s = estimate_scale_enlarge(r.sparse_flow, spec.center.value_or(footprint_centroid(r.reference_footprint)));
      }
      r.derived.scale = s;
      r.moved = apply_scaling(r.original, s, spec.scale_anchor);
      break;
    }
    case MotionMode::Rotation:
      r.derived.angle_deg = *spec.angle_deg;
      r.moved = apply_rotation(r.original, *spec.angle_deg);
      break;
    case MotionMode::Stretching: {
      lift();
      const auto& line = *spec.stretch_line;
      const PlaneCoeffs plane = fit_stretch_plane(lift_line_point(ref, line[0]), lift_line_point(ref, line[1]));
      r.derived.plane = plane;
      r.derived.stretch_offset = dominant_offset(pair);
      r.moved = apply_stretch(r.original, plane, pair, spec.clamp_stretch);
      break;
    }
  }

  bool any = false;
  for (const auto& view : scene.views) {
    try {
      r.flows.push_back(project_flow(r.original, r.moved, view, projection));
      r.visible.push_back(true);
      any = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyProjection) throw;
      r.flows.emplace_back(view.width(), view.height());
      r.visible.push_back(false);
    }
  }
  if (!any) fail(ErrorKind::EmptyProjection, "object projects into no view");
  return r;
}

std::string derived_json(const MotionSpec& spec, const MotionResult& r, const Scene& scene) {
  const auto& d = r.derived;
  json derived = {{"mode", std::string(to_string(d.mode))},
                  {"centroid", {d.centroid.x(), d.centroid.y(), d.centroid.z()}},
                  {"object_points", d.object_points},
                  {"sparse_points", d.sparse_points}};
  if (d.offset) derived["p_off"] = {d.offset->x(), d.offset->y(), d.offset->z()};
  if (d.scale) derived["s_f"] = *d.scale;
  if (d.angle_deg) derived["phi_deg"] = *d.angle_deg;
  if (d.plane) derived["plane"] = {{"A", d.plane->A}, {"B", d.plane->B}, {"D", d.plane->D}};
  if (d.stretch_offset) {
    derived["stretch_offset"] = {d.stretch_offset->x(), d.stretch_offset->y(), d.stretch_offset->z()};
  }
  json views = json::array();
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    views.push_back({{"view_id", scene.views[v].view_id},
                     {"visible", static_cast<bool>(r.visible[v])},
                     {"moving_pixels", count_set(r.flows[v].moving_mask())}});
  }
  return json{{"motion_spec", spec_json(spec)}, {"label", r.original.source_label}, {"derived", derived},
              {"views", views}}
      .dump(2);
}

}  // namespace mvedit
