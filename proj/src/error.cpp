#include "hfv/error.hpp"

namespace hfv {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return "io";
    case ErrorKind::Truncation:
      return "truncation";
    case ErrorKind::Structural:
      return "structural";
    case ErrorKind::Validation:
      return "validation";
    case ErrorKind::Lookup:
      return "lookup";
    case ErrorKind::Bounds:
      return "bounds";
    case ErrorKind::StaleCache:
      return "stale_cache";
    case ErrorKind::CorruptCache:
      return "corrupt_cache";
    case ErrorKind::Refusal:
      return "refusal";
  }
  return "unknown";
}

}  // namespace hfv
