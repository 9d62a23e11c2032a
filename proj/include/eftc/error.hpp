#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eftc {

enum class ErrorCode {
  InvalidGrid,
  TooFewPoints,
  OutOfDomain,
  DerivativeOrderTooHigh,
  DimensionMismatch,
  NonFiniteInput,
  InvalidFloor,
  EmptyInput,
  InvalidMtry,
  InvalidParam,
  KernelNotPD,
  InvalidScenario,
  RaggedFile,
  ParseError,
  LabelMismatch,
  InvalidPath,
  NoFeatures,
  GridMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Validation errors (bad input, bad parameters) as opposed to environment
/// failures such as unreadable files or a non-PD kernel matrix.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define EFTC_REQUIRE(cond, code, msg)        \
  do {                                       \
    if (!(cond)) throw ::eftc::Error((code), (msg)); \
  } while (false)

}  // namespace eftc
