#pragma once

#include <stdexcept>
#include <string>

namespace hfv {

enum class ErrorKind {
  Io,
  Truncation,
  Structural,
  Validation,
  Lookup,
  Bounds,
  StaleCache,
  CorruptCache,
  Refusal,
};

const char* to_string(ErrorKind kind);

/// Single exception type for every domain failure. `code` is a stable,
/// machine-readable tag (e.g. "unknown_submodel") surfaced by the HTTP API.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string code, const std::string& message) {
  throw Error(kind, std::move(code), message);
}

}  // namespace hfv
