#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace planar {

// Angles cross API boundaries wrapped so that degrees and radians cannot be
// mixed silently. Everything internal is radians.
struct AngleRad {
  double value = 0.0;
};

struct AngleDeg {
  double value = 0.0;
};

constexpr AngleRad deg_to_rad(AngleDeg a) {
  return AngleRad{a.value * std::numbers::pi / 180.0};
}

constexpr AngleDeg rad_to_deg(AngleRad a) {
  return AngleDeg{a.value * 180.0 / std::numbers::pi};
}

constexpr double deg(double degrees) { return deg_to_rad({degrees}).value; }
constexpr double to_deg(double radians) { return rad_to_deg({radians}).value; }

// Wraps into (-pi, pi].
AngleRad normalize_angle(AngleRad a);

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
};

// Pixel focal lengths (f / d) and principal point. pixel_aspect is d_y / d_x.
//
// Pixel axes: u grows to the right; v grows toward the top of the image, so a
// ground point seen above the principal point (v > v0) is farther away than
// the optical-axis ground intersection.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;
  double pixel_aspect = 1.0;

  // Throws InvalidArgument on non-positive focal lengths or aspect.
  void validate() const;
};

// Installation geometry of a camera over the ground plane.
//
// World frame: x east, y north, camera foot point at `position`. `yaw` is a
// heading measured clockwise from +y, so a camera with yaw 0 looks along +y
// and one with yaw 90 deg looks along +x. `pitch` is the downward tilt of the
// optical axis from horizontal. Roll is zero.
struct CameraPose {
  double height = 1.0;
  double pitch = 0.0;
  double yaw = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();

  void validate() const;
};

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

// Unit vector of a heading in the world frame.
inline Eigen::Vector2d heading_vector(double heading) {
  return {std::sin(heading), std::cos(heading)};
}

// Camera frame: x to the right of the optical axis, y forward along its
// horizontal projection.
inline PlanePoint camera_to_world(const CameraPose& pose, const PlanePoint& q) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  return {pose.position.x() + q.x * c + q.y * s,
          pose.position.y() - q.x * s + q.y * c};
}

inline PlanePoint world_to_camera(const CameraPose& pose, const PlanePoint& w) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double dx = w.x - pose.position.x();
  const double dy = w.y - pose.position.y();
  return {dx * c - dy * s, dx * s + dy * c};
}

inline double distance(const PlanePoint& a, const PlanePoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace planar
