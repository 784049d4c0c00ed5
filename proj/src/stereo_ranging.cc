#include "planar/stereo_ranging.h"

#include <cmath>
#include <numbers>

#include "planar/error.h"

namespace planar {

void StereoRig::validate() const {
  cam_a.intrinsics.validate();
  cam_b.intrinsics.validate();
  if (!(baseline > 0.0) || !std::isfinite(baseline)) {
    throw Error(ErrorCode::kInvalidRig, "baseline must be positive");
  }
  if (!std::isfinite(baseline_azimuth)) {
    throw Error(ErrorCode::kInvalidRig, "baseline azimuth must be finite");
  }
  const Eigen::Vector2d& pa = cam_a.pose.position;
  const Eigen::Vector2d& pb = cam_b.pose.position;
  if (pa != pb) {
    const double separation = (pb - pa).norm();
    if (std::abs(separation - baseline) > 1e-6 * baseline) {
      throw Error(ErrorCode::kInvalidRig,
                  "camera positions are " + std::to_string(separation) +
                      " m apart but the baseline is " + std::to_string(baseline) + " m");
    }
  }
}

AngleRad pixel_yaw(const CameraIntrinsics& intrinsics, const PixelPoint& p) {
  return {std::atan((p.u - intrinsics.u0) / intrinsics.fx)};
}

AngleRad total_yaw(const CameraPose& pose, const CameraIntrinsics& intrinsics,
                   const PixelPoint& p) {
  return normalize_angle({pose.yaw + pixel_yaw(intrinsics, p).value});
}

TriangleSolution solve_triangle(double baseline, AngleRad alpha, AngleRad beta,
                                double epsilon) {
  const double a = alpha.value;
  const double b = beta.value;
  constexpr double kPi = std::numbers::pi;
  if (!(baseline > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "baseline must be positive");
  }
  if (!(a > 0.0 && a < kPi && b > 0.0 && b < kPi)) {
    throw Error(ErrorCode::kDegenerateTriangle, "interior angles must lie in (0, 180) deg");
  }
  if (a + b >= kPi - epsilon) {
    throw Error(ErrorCode::kDegenerateTriangle,
                "rays are parallel or diverge (alpha + beta = " +
                    std::to_string(to_deg(a + b)) + " deg)");
  }
  TriangleSolution sol;
  sol.alpha = a;
  sol.beta = b;
  sol.gamma = kPi - a - b;
  const double sin_g = std::sin(sol.gamma);
  sol.dist_a = baseline * std::sin(b) / sin_g;
  sol.dist_b = baseline * std::sin(a) / sin_g;
  sol.target = {sol.dist_a * std::cos(a), sol.dist_a * std::sin(a)};
  return sol;
}

TriangleSolution range_target(const StereoRig& rig, const PixelPoint& p_a,
                              const PixelPoint& p_b, double epsilon) {
  rig.validate();
  const double az = rig.baseline_azimuth;
  const double off_a =
      normalize_angle({total_yaw(rig.cam_a.pose, rig.cam_a.intrinsics, p_a).value - az}).value;
  const double off_b =
      normalize_angle({total_yaw(rig.cam_b.pose, rig.cam_b.intrinsics, p_b).value - az -
                       std::numbers::pi})
          .value;
  const double alpha = std::abs(off_a);
  const double beta = std::abs(off_b);
  // Both rays must reach the same side of the baseline: clockwise from A->B
  // at cam_a means counter-clockwise from B->A at cam_b.
  if (alpha <= 0.0 || alpha >= std::numbers::pi || beta <= 0.0 ||
      beta >= std::numbers::pi || (off_a > 0.0) == (off_b > 0.0)) {
    throw Error(ErrorCode::kBearingBehindBaseline,
                "camera rays do not meet on one side of the baseline");
  }
  TriangleSolution sol = solve_triangle(rig.baseline, {alpha}, {beta}, epsilon);
  const double side = off_a > 0.0 ? 1.0 : -1.0;
  const Eigen::Vector2d target =
      rig.position_a() + sol.dist_a * heading_vector(az + side * alpha);
  sol.target = {target.x(), target.y()};
  return sol;
}

PixelPoint project_bearing(const Camera& camera, const PlanePoint& target) {
  const Eigen::Vector2d d =
      Eigen::Vector2d(target.x, target.y) - camera.pose.position;
  const double bearing = std::atan2(d.x(), d.y());
  const double off = normalize_angle({bearing - camera.pose.yaw}).value;
  if (!(std::abs(off) < std::numbers::pi / 2.0)) {
    throw Error(ErrorCode::kBehindCamera, "target is behind the camera");
  }
  return {camera.intrinsics.u0 + camera.intrinsics.fx * std::tan(off), camera.intrinsics.v0};
}

}  // namespace planar
