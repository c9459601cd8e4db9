#include "mvedit/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include "mvedit/io/png.hpp"

namespace mvedit {

using nlohmann::json;

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::Validation:
    case ErrorKind::InvalidArgument:
    case ErrorKind::Format:
      return 422;
    default:
      return is_degenerate_motion(kind) ? 422 : 500;
  }
}

namespace {

std::string png64(const RgbImage& image) { return io::base64_encode(io::encode_png_rgb(image)); }

json session_object(const SessionSummary& s) {
  return {{"session_id", s.id},
          {"view_id", s.view_id},
          {"label", s.label},
          {"footprint",
           {{"width", s.footprint.width()},
            {"height", s.footprint.height()},
            {"pixels", count_set(s.footprint)},
            {"mask_png", io::base64_encode(io::encode_png_mask(s.footprint))}}}};
}

json motion_object(const MotionPreview& p, const Scene& scene) {
  json views = json::array();
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    views.push_back({{"view_id", scene.views[v].view_id},
                     {"visible", static_cast<bool>(p.result.visible[v])},
                     {"flow_png", png64(p.flow_images[v])},
                     {"warped_png", png64(p.warped_images[v])}});
  }
  json manifest = json::parse(derived_json(p.spec, p.result, scene));
  return {{"revision", p.revision},
          {"motion_spec", manifest.at("motion_spec")},
          {"derived", manifest.at("derived")},
          {"views", views}};
}

json export_object(const ExportSummary& e) {
  return {{"revision", e.revision}, {"directory", e.directory.string()}, {"files", e.files}};
}

void send(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
  send(res, status, json{{"error", kind}, {"message", message}}.dump());
}

/// Runs `body`, mapping library errors and malformed JSON to status codes.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    send_error(res, http_status(e.kind()), to_string(e.kind()), e.detail());
  } catch (const json::exception& e) {
    send_error(res, 422, "ValidationError", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "InternalError", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::Validation, "request body must be a JSON object");
  return j;
}

}  // namespace

std::string session_json(const SessionSummary& summary) { return session_object(summary).dump(); }

std::string motion_json(const MotionPreview& preview, const Scene& scene) {
  return motion_object(preview, scene).dump();
}

std::string export_json(const ExportSummary& summary) { return export_object(summary).dump(); }

std::string state_json(const SessionManager::State& state, const Scene& scene) {
  json j = session_object(state.summary);
  j["footprint"].erase("mask_png");
  j["revision"] = state.latest ? state.latest->revision : 0;
  if (state.latest) {
    const json m = motion_object(*state.latest, scene);
    j["motion_spec"] = m.at("motion_spec");
    j["derived"] = m.at("derived");
  } else {
    j["motion_spec"] = nullptr;
    j["derived"] = nullptr;
  }
  json exports = json::array();
  for (const auto& e : state.exports) exports.push_back(export_object(e));
  j["exports"] = exports;
  return j.dump();
}

HttpService::HttpService(SessionManager& sessions)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/scene", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, scene_summary_json(sessions_)); });
  });
  s.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      for (const auto& item : body.items()) {
        if (item.key() != "view_id" && item.key() != "label") {
          fail(ErrorKind::Validation, "unknown key '" + item.key() + "'");
        }
      }
      if (!body.contains("view_id") || !body.contains("label")) fail(ErrorKind::Validation, "need view_id and label");
      const auto& label = body.at("label");
      if (!label.is_number_unsigned()) fail(ErrorKind::Validation, "label must be a non-negative integer");
      send(res, 200, session_json(sessions_.create(body.at("view_id").get<std::string>(),
                                                   label.get<SegmentLabel>())));
    });
  });
  s.Post(R"(/session/([0-9a-f]+)/motion)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const std::string view = sessions_.state(id).summary.view_id;  // 404 before 422
      json body = parse_body(req);
      if (!body.contains("reference_view")) body["reference_view"] = view;
      const MotionSpec spec = motion_spec_from_json(body.dump());
      send(res, 200, motion_json(sessions_.apply_motion(id, spec), sessions_.scene()));
    });
  });
  s.Post(R"(/session/([0-9a-f]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, export_json(sessions_.export_flows(req.matches[1]))); });
  });
  s.Get(R"(/session/([0-9a-f]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, state_json(sessions_.state(req.matches[1]), sessions_.scene())); });
  });
}

HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) fail(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

bool HttpService::listen() { return server_->listen_after_bind(); }

void HttpService::stop() { server_->stop(); }

}  // namespace mvedit
