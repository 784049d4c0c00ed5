#include "planar/geometry.h"

#include "planar/error.h"

namespace planar {

AngleRad normalize_angle(AngleRad a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(a.value + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= std::numbers::pi;
  // fmod lands the lower boundary on -pi; the convention keeps +pi.
  if (r <= -std::numbers::pi) r = std::numbers::pi;
  return {r};
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (!(pixel_aspect > 0.0) || !std::isfinite(pixel_aspect)) {
    throw Error(ErrorCode::kInvalidArgument, "pixel_aspect must be positive");
  }
  if (!std::isfinite(u0) || !std::isfinite(v0)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point must be finite");
  }
}

void CameraPose::validate() const {
  if (!(height > 0.0) || !std::isfinite(height)) {
    throw Error(ErrorCode::kInvalidArgument, "camera height must be positive");
  }
  if (!std::isfinite(pitch) || !std::isfinite(yaw) || !position.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose must be finite");
  }
}

}  // namespace planar
