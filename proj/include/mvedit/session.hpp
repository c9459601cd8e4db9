#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mvedit/motion.hpp"

namespace mvedit {

struct SessionOptions {
  std::chrono::seconds ttl{1800};
  std::filesystem::path export_root = "exports";
  ProjectionOptions projection;
  int thumbnail_size = 128;  // longest side
};

struct SessionSummary {
  std::string id;
  std::string view_id;
  SegmentLabel label = 0;
  Mask footprint;
};

struct MotionPreview {
  int revision = 0;
  MotionSpec spec;
  MotionResult result;
  std::vector<RgbImage> flow_images;    // colorized, per view
  std::vector<RgbImage> warped_images;  // per view
};

struct ExportSummary {
  int revision = 0;
  std::filesystem::path directory;
  std::vector<std::string> files;
};

/// In-memory authoring sessions over one immutable scene. Sessions expire
/// after `ttl` without use. Motion updates on one session run one at a time;
/// different sessions proceed in parallel.
class SessionManager {
 public:
  SessionManager(Scene scene, SessionOptions options = {});

  const Scene& scene() const noexcept { return scene_; }
  const SessionOptions& options() const noexcept { return options_; }

  /// Labels present in the cloud with their point counts, ascending.
  std::vector<std::pair<SegmentLabel, std::size_t>> labels() const;

  /// NotFound for an unknown view or label; DegenerateSelection for < 3 points.
  SessionSummary create(const std::string& view_id, SegmentLabel label);

  /// Fills an empty reference_view with the session's view; a different one
  /// is a Validation error.
  MotionPreview apply_motion(const std::string& id, MotionSpec spec);

  /// Writes the flow set of the latest motion under export_root/<id>/rev<n>.
  /// Conflict before any motion.
  ExportSummary export_flows(const std::string& id);

  struct State {
    SessionSummary summary;
    std::optional<MotionPreview> latest;
    std::vector<ExportSummary> exports;
  };
  State state(const std::string& id);

  std::size_t size();
  /// Drops expired sessions; returns how many.
  std::size_t purge_expired();

 private:
  struct Session {
    std::mutex mutex;
    SessionSummary summary;
    ObjectPoints object;
    std::optional<MotionPreview> latest;
    std::vector<ExportSummary> exports;
    std::chrono::steady_clock::time_point last_used;
  };

  std::shared_ptr<Session> find(const std::string& id);
  std::string next_id();

  Scene scene_;
  SessionOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 ids_;
};

/// Scene summary JSON: views with base64 PNG thumbnails, labels with counts.
std::string scene_summary_json(const SessionManager& sessions);

}  // namespace mvedit
