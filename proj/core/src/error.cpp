#include "driftqa/error.hpp"

namespace driftqa {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::DegenerateData: return "degenerate data";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::DegenerateResample: return "degenerate resample";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace driftqa
