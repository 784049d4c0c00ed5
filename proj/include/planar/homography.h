#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "planar/geometry.h"

namespace planar {

// Invertible 3x3 projective map, stored with unit Frobenius norm and the sign
// chosen so that m(2,2) > 0 (or, when m(2,2) == 0, the first nonzero entry in
// row-major order is positive).
class Homography {
 public:
  Homography() : Homography(Eigen::Matrix3d::Identity()) {}
  // Normalizes m. Throws DegenerateHomography when |det| <= 1e-12 after
  // normalization or when m is not finite.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Homography inverse() const;
  // this * other (apply other first).
  Homography compose(const Homography& other) const;

  // Unit Frobenius norm and sign convention. Idempotent bit for bit.
  static Eigen::Matrix3d normalize(const Eigen::Matrix3d& m);

 private:
  Eigen::Matrix3d m_;
};

// Perspective action. Throws PointAtInfinity when |w| < 1e-12.
Eigen::Vector2d apply(const Homography& h, const Eigen::Vector2d& p);
PlanePoint apply(const Homography& h, const PixelPoint& p);

struct Correspondence {
  Eigen::Vector2d src;
  Eigen::Vector2d dst;
};

struct RansacConfig {
  double threshold = 3.0;  // forward transfer error, target-frame units
  double confidence = 0.999;
  int max_iterations = 2000;
  std::uint64_t seed = 0;
};

struct EstimationReport {
  int inlier_count = 0;
  double rms_error = 0.0;  // forward transfer RMS on inliers
  bool condition_warning = false;
  std::vector<bool> inliers;
};

struct Estimate {
  Homography homography;
  EstimationReport report;
};

// Hartley-normalized DLT; with a RANSAC config, minimal-sample consensus
// followed by a refit on the inliers. Throws InsufficientPoints,
// DegenerateConfiguration or NoConsensus.
Estimate estimate_dlt(const std::vector<Correspondence>& correspondences,
                      const std::optional<RansacConfig>& robust = std::nullopt);

// Image -> metric overhead raster (ground_scale pixels per meter) for the
// monocular camera model; apply(bev, p) / ground_scale equals locate(p).
// Throws InvalidPitch.
Homography bev_from_camera(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                           double ground_scale);

struct ControlPoint {
  PixelPoint pixel;
  PlanePoint world;
};

// Image -> world (meters) from >= 4 surveyed control points.
Estimate metric_rectify(const std::vector<ControlPoint>& controls,
                        const std::optional<RansacConfig>& robust = std::nullopt);

}  // namespace planar
