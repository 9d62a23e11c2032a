#include "eftc/error.hpp"

namespace eftc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DerivativeOrderTooHigh: return "DerivativeOrderTooHigh";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidFloor: return "InvalidFloor";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidMtry: return "InvalidMtry";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::KernelNotPD: return "KernelNotPD";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::RaggedFile: return "RaggedFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::NoFeatures: return "NoFeatures";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  return code != ErrorCode::KernelNotPD && code != ErrorCode::IoError;
}

}  // namespace eftc
