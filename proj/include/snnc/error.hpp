#pragma once

#include <stdexcept>
#include <string>

namespace snnc {

// Categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  Parse = 2,
  Validation = 2,
  Infeasible = 3,
  Internal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(ErrorKind::Infeasible, what) {}
};

/// A token-free cycle or a stalled simulation. Reported as an internal
/// invariant breach when it escapes the pipeline, since every stage is
/// supposed to preserve deadlock freedom.
class DeadlockError : public Error {
 public:
  explicit DeadlockError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

}  // namespace snnc
