#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvedit {

enum class ErrorKind {
  NotFound,
  Validation,
  InvalidArgument,
  DegenerateSelection,
  InvalidDepth,
  DegenerateFlow,
  InvalidFactor,
  DegeneratePlane,
  DegenerateStretch,
  EmptyProjection,
  Format,
  Index,
  InvalidConfig,
  Capability,
  InvalidBatch,
  Timeout,
  NoOverlap,
  Io,
  Conflict,  // request is valid but the session is not ready for it
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure the library reports carries one of the kinds above; callers
/// (CLI exit codes, HTTP status codes) dispatch on kind(), never on the text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// True for the errors that mean "the requested motion is degenerate" rather
/// than "the input is malformed".
bool is_degenerate_motion(ErrorKind kind) noexcept;

}  // namespace mvedit
