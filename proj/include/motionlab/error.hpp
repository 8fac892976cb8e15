#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace motionlab {

// Coarse failure categories. The CLI prints the category as the prefix of its
// one-line error message, so the names are part of the command-line contract.
enum class ErrorKind {
  shape,
  domain,
  config,
  io,
  data,
  checkpoint,
  numeric,
  gradient,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::domain: return "domain";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::data: return "data";
    case ErrorKind::checkpoint: return "checkpoint";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::gradient: return "gradient";
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

}  // namespace motionlab
