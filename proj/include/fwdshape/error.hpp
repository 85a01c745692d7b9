#pragma once

#include <stdexcept>
#include <string>

namespace fwdshape {

enum class ErrorKind {
  InvalidArgument,  // precondition or configuration problem
  Data,             // malformed or insufficient input data
  Io,               // file could not be read or written
  Numerical,        // rank deficiency and similar solver failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fwdshape
