#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace salgrain {

enum class ErrorCode {
  NoCorrectAnnotations,
  DimensionMismatch,
  NotBinary,
  EmptySaliency,
  OutOfBounds,
  ShapeMismatch,
  DegenerateLabels,
  EmptyDataset,
  ConfigInvalid,
  ParseError,
  UnknownKey,
  MalformedHeader,
  TruncatedPayload,
  UnsupportedMaxval,
  IoError,
  NumericFailure,
};

std::string_view to_string(ErrorCode code);

// Process exit code for the CLI: 2 config, 3 data, 4 numeric.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace salgrain
