#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planar {

// Every domain failure carries one of these codes. The name() string is what
// the CLI prints on stderr, so keep them stable.
enum class ErrorCode {
  kInvalidArgument,
  kRayAboveHorizon,
  kRayTooShallow,
  kBehindCamera,
  kOffImagePlane,
  kInvalidRange,
  kInsufficientPoints,
  kDegenerateGeometry,
  kNoConvergence,
  kPointAtInfinity,
  kDegenerateConfiguration,
  kDegenerateHomography,
  kNoConsensus,
  kInvalidPitch,
  kEmptyBounds,
  kSolveDisconnected,
  kNoGauge,
  kUnknownImage,
  kNumericalFailure,
  kDegenerateTriangle,
  kBearingBehindBaseline,
  kInvalidRig,
  kNoOverlap,
  kUnknownField,
  kParseError,
  kIoError,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace planar
