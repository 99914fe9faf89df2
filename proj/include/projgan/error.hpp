#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace projgan {

enum class ErrorKind {
  Shape,
  Range,
  Io,
  Format,
  Config,
  Source,
  Numeric,
  EmptySet,
  Infeasible,
  Usage,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports carries a kind so the CLI can emit a
// machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace projgan
