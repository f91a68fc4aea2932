#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tutorgen {

enum class ErrorKind {
  format,      // unparseable input document
  validation,  // well-formed input violating a rule
  domain,      // operation undefined for the given input
  protocol,    // state machine misuse
  backend,     // chat / classifier backend failure
  timeout,     // retries exhausted
  not_found,
  conflict,
  unauthorized,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format: return "format";
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::backend: return "backend";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::unauthorized: return "unauthorized";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error(ErrorKind::format, m) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m) : Error(ErrorKind::validation, m) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error(ErrorKind::domain, m) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& m) : Error(ErrorKind::protocol, m) {}
};

/// Non-retryable backend failure. `status` is 0 when no HTTP response was
/// received (scripted backends, transport errors on the last attempt).
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& m, int status = 0)
      : Error(ErrorKind::backend, m), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TimeoutError : public Error {
 public:
  explicit TimeoutError(const std::string& m) : Error(ErrorKind::timeout, m) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& m) : Error(ErrorKind::not_found, m) {}
};

class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& m) : Error(ErrorKind::conflict, m) {}
};

class UnauthorizedError : public Error {
 public:
  explicit UnauthorizedError(const std::string& m) : Error(ErrorKind::unauthorized, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

}  // namespace tutorgen
