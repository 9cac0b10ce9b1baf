#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pssh {

enum class ErrorKind {
  not_ssh,
  malformed,
  oversize,
  truncated,
  timeout,
  connect_failed,
  protocol_error,
  no_common_algorithm,
  not_found,
  storage_failure,
  io_error,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_ssh: return "not-ssh";
    case ErrorKind::malformed: return "malformed";
    case ErrorKind::oversize: return "oversize";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::connect_failed: return "connect-failed";
    case ErrorKind::protocol_error: return "protocol-error";
    case ErrorKind::no_common_algorithm: return "no-common-algorithm";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::storage_failure: return "storage-failure";
    case ErrorKind::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace pssh
