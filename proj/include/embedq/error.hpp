#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace embedq {

enum class ErrorKind {
  missing_file,
  shape_mismatch,
  non_finite,
  schema,
  invalid_argument,
  io,
  corrupt,
  locked,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (CLI, HTTP layer) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace embedq
