#pragma once

#include <stdexcept>
#include <string>

namespace sparse_tda {

enum class ErrorKind {
  parse,
  validation,
  degenerate,
  configuration,
  convergence,
  io,
};

// Single exception type for the library; the kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::convergence:
      return 3;
    case ErrorKind::io:
      return 4;
    default:
      return 2;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::validation, what);
}

}  // namespace sparse_tda
