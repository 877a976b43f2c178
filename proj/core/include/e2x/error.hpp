#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace e2x {

enum class ErrorCode {
  kShapeMismatch,
  kNonFiniteValue,
  kInvalidSegmentation,
  kInvalidArgument,
  kLengthMismatch,
  kTooManySegments,
  kTooManyFeatures,
  kGradientUnavailable,
  kSingularSystem,
  kWindowTooLarge,
  kNoDetections,
  kIoError,
  kParseError,
};

std::string_view to_string(ErrorCode code);

// Validation-class errors are caller mistakes (bad shapes, bad parameters,
// malformed files); the remaining codes are raised while computing.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace e2x
