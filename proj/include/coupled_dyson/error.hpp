#pragma once

#include <stdexcept>
#include <string>

namespace cdyson {

enum class ErrorKind {
  kInvalidArgument,  // bad parameters or config
  kNumerical,        // solver / integrator failure
};

/// Library-wide exception. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_argument(const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, what);
}

[[noreturn]] inline void fail_numerical(const std::string& what) {
  throw Error(ErrorKind::kNumerical, what);
}

}  // namespace cdyson
