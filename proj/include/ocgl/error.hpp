#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ocgl {

enum class ErrorKind {
  dimension,
  invalid_label,
  numeric,
  contract,
  stream_order,
  dangling_edge,
  empty_batch,
  format,
  schedule,
  capacity,
  config,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can report it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, std::string_view message) {
  if (!condition) fail(kind, std::string(message));
}

}  // namespace ocgl
