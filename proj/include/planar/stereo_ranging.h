#pragma once

#include "planar/geometry.h"

namespace planar {

// Two monocular cameras sharing a ground plane, seen from above.
//
//                 target
//                  /\    .
//          dist_a /  \ dist_b
//                / g  \  .
//               /a    b\ .
//        cam_a +--------+ cam_b
//                   d    (baseline_azimuth: heading from cam_a to cam_b)
//
// a and b are the interior angles between the baseline and each camera's ray
// to the target; g = pi - a - b. Law of sines: dist_a = d sin b / sin g and
// dist_b = d sin a / sin g.
//
// A camera's ray heading is pose.yaw + atan((u - u0) / f_x), clockwise
// positive like pose.yaw, so pixels right of the principal point look to the
// right. Pitch never enters.
struct StereoRig {
  Camera cam_a;
  Camera cam_b;
  double baseline = 0.0;          // meters
  double baseline_azimuth = 0.0;  // radians, heading from cam_a to cam_b

  // Throws InvalidRig on a non-positive baseline or on camera positions that
  // disagree with it. Coincident positions mean "positions not given".
  void validate() const;
  Eigen::Vector2d position_a() const { return cam_a.pose.position; }
};

struct TriangleSolution {
  double alpha = 0.0;   // interior angle at cam_a
  double beta = 0.0;    // interior angle at cam_b
  double gamma = 0.0;   // angle at the target
  double dist_a = 0.0;  // cam_a -> target
  double dist_b = 0.0;  // cam_b -> target
  PlanePoint target;
};

// Near-parallel rays (alpha + beta >= pi - epsilon) are rejected.
inline constexpr double kDefaultTriangleEpsilon = deg(0.01);

AngleRad pixel_yaw(const CameraIntrinsics& intrinsics, const PixelPoint& p);
AngleRad total_yaw(const CameraPose& pose, const CameraIntrinsics& intrinsics,
                   const PixelPoint& p);

// Triangle with cam_a at the origin and cam_b at (d, 0); the target is
// reported on the +y side. Throws DegenerateTriangle.
TriangleSolution solve_triangle(double baseline, AngleRad alpha, AngleRad beta,
                                double epsilon = kDefaultTriangleEpsilon);

// Throws DegenerateTriangle or BearingBehindBaseline. The target is reported
// in the world frame.
TriangleSolution range_target(const StereoRig& rig, const PixelPoint& p_a,
                              const PixelPoint& p_b,
                              double epsilon = kDefaultTriangleEpsilon);

// Forward model consistent with the pixel-yaw bearing: the column at which a
// camera sees a ground point, u = u0 + f_x tan(bearing - yaw). v is set to v0.
// Throws BehindCamera when the point is 90 deg or more off the optical axis.
PixelPoint project_bearing(const Camera& camera, const PlanePoint& target);

}  // namespace planar
