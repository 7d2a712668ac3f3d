#pragma once

#include <stdexcept>
#include <string>

namespace supaudit {

enum class ErrorKind {
  io,
  parse,
  validation,
  compute,
  backend,
  auth,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Transport-level failure worth retrying (rate limit, 5xx, connect error).
class TransientError : public Error {
 public:
  TransientError(std::string message, int retry_after_ms = -1)
      : Error(ErrorKind::backend, std::move(message)),
        retry_after_ms_(retry_after_ms) {}

  // Server-provided hint; -1 when none was given.
  int retry_after_ms() const { return retry_after_ms_; }

 private:
  int retry_after_ms_;
};

}  // namespace supaudit
