#include "mvedit/error.hpp"

namespace mvedit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegenerateSelection: return "DegenerateSelection";
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::DegenerateFlow: return "DegenerateFlow";
    case ErrorKind::InvalidFactor: return "InvalidFactor";
    case ErrorKind::DegeneratePlane: return "DegeneratePlane";
    case ErrorKind::DegenerateStretch: return "DegenerateStretch";
    case ErrorKind::EmptyProjection: return "EmptyProjection";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Index: return "IndexError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Capability: return "CapabilityError";
    case ErrorKind::InvalidBatch: return "InvalidBatch";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Conflict: return "Conflict";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

bool is_degenerate_motion(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateSelection:
    case ErrorKind::InvalidDepth:
    case ErrorKind::DegenerateFlow:
    case ErrorKind::InvalidFactor:
    case ErrorKind::DegeneratePlane:
    case ErrorKind::DegenerateStretch:
    case ErrorKind::EmptyProjection:
      return true;
    default:
      return false;
  }
}

}  // namespace mvedit
