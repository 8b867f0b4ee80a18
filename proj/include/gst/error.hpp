#pragma once

#include <stdexcept>
#include <string>

namespace gst {

enum class ErrorKind {
  kConfig,     // bad arguments, shapes, or inconsistent configuration
  kIo,         // file missing, truncated, or unwritable
  kNumerical,  // non-finite values, degenerate geometry
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_config(const std::string& what) { throw Error(ErrorKind::kConfig, what); }
[[noreturn]] inline void fail_io(const std::string& what) { throw Error(ErrorKind::kIo, what); }
[[noreturn]] inline void fail_numerical(const std::string& what) {
  throw Error(ErrorKind::kNumerical, what);
}

}  // namespace gst
