#include "planar/error.h"

namespace planar {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kRayAboveHorizon: return "RayAboveHorizon";
    case ErrorCode::kRayTooShallow: return "RayTooShallow";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kOffImagePlane: return "OffImagePlane";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kPointAtInfinity: return "PointAtInfinity";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kDegenerateHomography: return "DegenerateHomography";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kInvalidPitch: return "InvalidPitch";
    case ErrorCode::kEmptyBounds: return "EmptyBounds";
    case ErrorCode::kSolveDisconnected: return "SolveDisconnected";
    case ErrorCode::kNoGauge: return "NoGauge";
    case ErrorCode::kUnknownImage: return "UnknownImage";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kDegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::kBearingBehindBaseline: return "BearingBehindBaseline";
    case ErrorCode::kInvalidRig: return "InvalidRig";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kUnknownField: return "UnknownField";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace planar
