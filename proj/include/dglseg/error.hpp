#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dglseg {

enum class ErrorKind {
  Input,          // malformed or inconsistent caller data
  Configuration,  // parameters that cannot be honoured
  Domain,         // numeric argument outside its mathematical domain
  Io,             // file or payload could not be read/written
  State,          // operation not valid in the current state
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::State: return "state error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

// Literal messages are only turned into strings on failure (used in per-pixel loops).
inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) fail(kind, message);
}

// Non-fatal conditions (label remaps, clamped seed counts) go through this sink.
using WarningSink = std::function<void(std::string_view)>;

inline WarningSink stderr_warnings() {
  return [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
}

inline void warn(const WarningSink& sink, std::string_view msg) {
  if (sink) sink(msg);
}

}  // namespace dglseg
