#include "ocgl/error.hpp"

namespace ocgl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::invalid_label: return "invalid_label";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::contract: return "contract";
    case ErrorKind::stream_order: return "stream_order";
    case ErrorKind::dangling_edge: return "dangling_edge";
    case ErrorKind::empty_batch: return "empty_batch";
    case ErrorKind::format: return "format";
    case ErrorKind::schedule: return "schedule";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace ocgl
