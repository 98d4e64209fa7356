#include "salgrain/error.hpp"

namespace salgrain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoCorrectAnnotations: return "NoCorrectAnnotations";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::EmptySaliency: return "EmptySaliency";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownKey:
      return 2;
    case ErrorCode::NumericFailure:
      return 4;
    default:
      return 3;
  }
}

}  // namespace salgrain
