#include "mvedit/session.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "mvedit/flow_set.hpp"
#include "mvedit/io/png.hpp"

namespace mvedit {

using Clock = std::chrono::steady_clock;

SessionManager::SessionManager(Scene scene, SessionOptions options)
    : scene_(std::move(scene)), options_(std::move(options)), ids_(std::random_device{}()) {
  validate(scene_);
  if (options_.ttl.count() <= 0) fail(ErrorKind::InvalidArgument, "session ttl must be positive");
}

std::vector<std::pair<SegmentLabel, std::size_t>> SessionManager::labels() const {
  std::map<SegmentLabel, std::size_t> counts;
  for (SegmentLabel l : scene_.cloud.labels) ++counts[l];
  return {counts.begin(), counts.end()};
}

std::string SessionManager::next_id() {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(ids_()));
  return buf;
}

SessionSummary SessionManager::create(const std::string& view_id, SegmentLabel label) {
  const CameraView& view = scene_.view(view_id);
  auto session = std::make_shared<Session>();
  session->object = select_object(scene_, label);
  session->summary.view_id = view_id;
  session->summary.label = label;
  session->summary.footprint = object_footprint(session->object, view);
  session->last_used = Clock::now();
  std::lock_guard lock(mutex_);
  const auto now = Clock::now();
  std::erase_if(sessions_, [&](const auto& item) { return now - item.second->last_used > options_.ttl; });
  std::string id;
  do id = next_id();
  while (sessions_.contains(id));
  session->summary.id = id;
  sessions_.emplace(id, session);
  return session->summary;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorKind::NotFound, "session " + id);
  if (Clock::now() - it->second->last_used > options_.ttl) {
    sessions_.erase(it);
    fail(ErrorKind::NotFound, "session " + id + " expired");
  }
  return it->second;
}

MotionPreview SessionManager::apply_motion(const std::string& id, MotionSpec spec) {
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  session->last_used = Clock::now();
  if (spec.reference_view.empty()) spec.reference_view = session->summary.view_id;
  if (spec.reference_view != session->summary.view_id) {
    fail(ErrorKind::Validation, "reference_view must be the session view " + session->summary.view_id);
  }
  MotionPreview preview;
  preview.result = estimate_motion(scene_, session->summary.label, spec, options_.projection);
  preview.spec = std::move(spec);
  preview.revision = session->latest ? session->latest->revision + 1 : 1;
  for (std::size_t v = 0; v < scene_.views.size(); ++v) {
    preview.flow_images.push_back(colorize_flow(preview.result.flows[v]));
    preview.warped_images.push_back(warped_preview(scene_.views[v].image, preview.result.flows[v]));
  }
  session->latest = preview;
  session->last_used = Clock::now();
  return preview;
}

ExportSummary SessionManager::export_flows(const std::string& id) {
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  session->last_used = Clock::now();
  if (!session->latest) fail(ErrorKind::Conflict, "no motion applied to session " + id);
  const MotionPreview& latest = *session->latest;
  ExportSummary summary;
  summary.revision = latest.revision;
  summary.directory = options_.export_root / id / ("rev" + std::to_string(latest.revision));
  summary.files = write_flow_set(summary.directory, scene_, latest.spec, latest.result);
  session->exports.push_back(summary);
  return summary;
}

SessionManager::State SessionManager::state(const std::string& id) {
  const auto session = find(id);
  std::lock_guard lock(session->mutex);
  session->last_used = Clock::now();
  return {session->summary, session->latest, session->exports};
}

std::size_t SessionManager::size() {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t SessionManager::purge_expired() {
  std::lock_guard lock(mutex_);
  const auto now = Clock::now();
  return std::erase_if(sessions_, [&](const auto& item) { return now - item.second->last_used > options_.ttl; });
}

namespace {

RgbImage thumbnail(const RgbImage& image, int size) {
  const int factor = std::max(1, (std::max(image.width(), image.height()) + size - 1) / size);
  const int w = image.width() / factor;
  const int h = image.height() / factor;
  RgbImage out(std::max(w, 1), std::max(h, 1), 3);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        int sum = 0, n = 0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            const int sx = x * factor + dx, sy = y * factor + dy;
            if (!image.contains(sx, sy)) continue;
            sum += image.at(sx, sy, c);
            ++n;
          }
        }
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
      }
    }
  }
  return out;
}

}  // namespace

std::string scene_summary_json(const SessionManager& sessions) {
  const Scene& scene = sessions.scene();
  nlohmann::json views = nlohmann::json::array();
  for (const auto& view : scene.views) {
    views.push_back({{"view_id", view.view_id},
                     {"width", view.width()},
                     {"height", view.height()},
                     {"thumbnail_png", io::base64_encode(io::encode_png_rgb(
                                           thumbnail(view.image, sessions.options().thumbnail_size)))}});
  }
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& [label, count] : sessions.labels()) labels.push_back({{"label", label}, {"points", count}});
  return nlohmann::json{{"name", scene.meta.name}, {"views", views}, {"labels", labels}}.dump();
}

}  // namespace mvedit
