#include "projgan/error.hpp"

namespace projgan {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Range: return "range";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Config: return "config";
    case ErrorKind::Source: return "mask_source";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::EmptySet: return "empty_set";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

}  // namespace projgan
