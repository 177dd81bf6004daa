// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace peek {

/// Coarse failure classes. Values line up with the CLI exit codes.
enum class ErrorKind {
  Validation = 1,
  Backend = 2,
  Io = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

struct BackendError : Error {
  BackendError(const std::string& what, bool transient)
      : Error(ErrorKind::Backend, what), transient_(transient) {}
  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

}  // namespace peek
