#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wbdr {

enum class ErrorCode {
  kDimensionMismatch,
  kBadWeights,
  kEmpty,
  kNonFinite,
  kShapeMismatch,
  kBadExponent,
  kBadLambdas,
  kNumericalFailure,
  kTooLarge,
  kZeroWeight,
  kZeroAtomWeight,
  kInvalidSolution,
  kEmptyInput,
  kBadParams,
  kBadSize,
  kBadMagic,
  kTruncatedFile,
  kCountMismatch,
  kParseError,
  kRaggedRows,
  kNotMultipleOfN,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Usage and input problems, as opposed to solver failures.
  bool is_input_error() const noexcept {
    return code_ != ErrorCode::kNumericalFailure;
  }

 private:
  ErrorCode code_;
};

}  // namespace wbdr
