#pragma once

#include <memory>
#include <string>

#include "mvedit/session.hpp"

namespace httplib {
class Server;
}

namespace mvedit {

/// HTTP status for a library error: 404 NotFound, 409 Conflict, 422 for
/// schema and degenerate-motion errors, 500 otherwise.
int http_status(ErrorKind kind) noexcept;

/// Response bodies, shared by the HTTP layer and its tests.
std::string session_json(const SessionSummary& summary);
std::string motion_json(const MotionPreview& preview, const Scene& scene);
std::string export_json(const ExportSummary& summary);
std::string state_json(const SessionManager::State& state, const Scene& scene);

/// JSON-over-HTTP front end. Every handler is a thin call into SessionManager.
class HttpService {
 public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();

  /// Binds to `port` (0 = any free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace mvedit
