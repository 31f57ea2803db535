#pragma once

#include <stdexcept>
#include <string>

namespace zsd {

enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  missing_class,
  duplicate_class,
  unknown_class,
  dimension_mismatch,
  zero_norm_vector,
  label_out_of_range,
  non_finite_value,
  non_finite_gradient,
  vocabulary_mismatch,
  io_error,
};

/// Library-wide exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace zsd
