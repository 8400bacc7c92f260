#pragma once

#include <stdexcept>
#include <string>

namespace carnn {

enum class ErrorKind {
  io,
  config,
  data,
  format,
  ordering,
  lookup,
  compatibility,
  numerical,
};

/// Base of every error the library raises. The kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::format: return "format";
    case ErrorKind::ordering: return "ordering";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

/// Process exit code for each error kind; 0 is success, 1 is a failed check.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::data: return 4;
    case ErrorKind::format: return 5;
    case ErrorKind::compatibility: return 6;
    case ErrorKind::numerical: return 7;
    case ErrorKind::ordering: return 8;
    case ErrorKind::lookup: return 9;
  }
  return 10;
}

}  // namespace carnn
