#include "embedq/error.hpp"

namespace embedq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::missing_file: return "missing_file";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::schema: return "schema";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
    case ErrorKind::corrupt: return "corrupt";
    case ErrorKind::locked: return "locked";
  }
  return "unknown";
}

}  // namespace embedq
