#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "planar/geometry.h"
#include "planar/lm.h"

namespace planar {

// Corrections recovered from surveyed ground points: pitch offset from the
// installation and principal-point misalignment. delta_height is only
// estimated on request.
struct CalibrationCorrection {
  double delta_pitch = 0.0;  // radians
  double delta_u0 = 0.0;     // pixels
  double delta_v0 = 0.0;     // pixels
  double delta_height = 0.0; // meters

  void validate() const;
};

struct MonoRangingModel {
  CameraIntrinsics intrinsics;
  CameraPose pose;
  std::optional<CalibrationCorrection> corrections;
  // Depression angles below this are flagged as too shallow to range
  // reliably; with strict_shallow they raise RayTooShallow instead.
  double shallow_threshold = deg(0.5);
  bool strict_shallow = false;

  double effective_pitch() const;
  double effective_height() const;
  double effective_u0() const;
  double effective_v0() const;

  // Checks intrinsics, pose and that the effective pitch is in (0, pi/2).
  void validate() const;
};

// Depression angle of the ray through p: alpha - atan((v - v0) / f_y).
double depression_angle(const MonoRangingModel& model, const PixelPoint& p);

// True when the ray is valid but below model.shallow_threshold.
bool is_too_shallow(const MonoRangingModel& model, const PixelPoint& p);

// Y = H / tan(beta). Throws RayAboveHorizon when beta <= 0.
double longitudinal_distance(const MonoRangingModel& model, const PixelPoint& p);

// X = (u - u0) H / (sqrt(f_x^2 + (v - v0)^2 a^2) sin(beta)), a = d_y / d_x.
double lateral_coordinate(const MonoRangingModel& model, const PixelPoint& p);

// Ground point in the camera frame (x right, y forward).
PlanePoint locate_camera_frame(const MonoRangingModel& model, const PixelPoint& p);

// Ground point in the world frame.
PlanePoint locate(const MonoRangingModel& model, const PixelPoint& p);

// Inverse of locate. Throws BehindCamera or OffImagePlane.
PixelPoint project_to_pixel(const MonoRangingModel& model, const PlanePoint& q);

struct SensitivitySample {
  double pitch;  // radians
  double distance;
};

struct SensitivityCurve {
  double height = 0.0;
  std::vector<SensitivitySample> samples;
};

// Image-center distance H / tan(alpha) over an inclusive pitch sweep with
// floor((max - min) / step) + 1 samples. Throws InvalidRange.
SensitivityCurve sensitivity_sweep(double height, AngleRad pitch_min,
                                   AngleRad pitch_max, AngleRad step);

struct ControlObservation {
  PixelPoint pixel;
  PlanePoint world;
};

struct CalibrationOptions {
  bool estimate_height = false;
  // Condition number of the column-scaled normal equations above which the
  // observation geometry is considered degenerate.
  double max_condition = 1e12;
  LmConfig solver = [] {
    LmConfig c;
    c.max_iterations = 200;
    c.cost_tolerance = 1e-12;
    c.parameter_tolerance = 1e-12;
    return c;
  }();
};

struct CalibrationResult {
  CalibrationCorrection correction;
  double rms = 0.0;  // world-frame residual RMS, meters
  int iterations = 0;
};

// Least-squares fit of (delta_pitch, delta_u0, delta_v0[, delta_height])
// minimizing sum ||locate(p) - q||^2. Throws InsufficientPoints,
// DegenerateGeometry or NoConvergence.
CalibrationResult fit_calibration(const CameraIntrinsics& intrinsics,
                                  const CameraPose& pose,
                                  const std::vector<ControlObservation>& observations,
                                  const CalibrationOptions& options = {});

// World-frame residuals (2 per observation) at the given correction and their
// analytic Jacobian with respect to the fitted parameters (3 or 4 columns).
void calibration_residuals(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                           const std::vector<ControlObservation>& observations,
                           const CalibrationCorrection& correction, bool with_height,
                           Eigen::VectorXd* residuals, Eigen::MatrixXd* jacobian);

}  // namespace planar
