#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftqa {

enum class ErrorKind {
  Schema,
  Parse,
  EmptyInput,
  Capacity,
  Domain,
  DegenerateData,
  Shape,
  Consistency,
  Alignment,
  DegenerateResample,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this one exception type; callers
// branch on kind() when they need to distinguish causes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace driftqa
