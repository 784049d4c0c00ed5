#include "planar/mono_ranging.h"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "planar/error.h"

namespace planar {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

// Per-pixel intermediate quantities of the vertical and horizontal models.
struct RayGeometry {
  double s;     // v - v0 (effective)
  double t;     // u - u0 (effective)
  double beta;  // depression angle
  double root;  // sqrt(f_x^2 + s^2 a^2)
};

RayGeometry ray_geometry(const MonoRangingModel& m, const PixelPoint& p) {
  RayGeometry g;
  g.s = p.v - m.effective_v0();
  g.t = p.u - m.effective_u0();
  g.beta = m.effective_pitch() - std::atan(g.s / m.intrinsics.fy);
  const double a = m.intrinsics.pixel_aspect;
  g.root = std::sqrt(m.intrinsics.fx * m.intrinsics.fx + g.s * g.s * a * a);
  return g;
}

RayGeometry checked_ray(const MonoRangingModel& m, const PixelPoint& p) {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
    throw Error(ErrorCode::kInvalidArgument, "pixel coordinates must be finite");
  }
  m.validate();
  RayGeometry g = ray_geometry(m, p);
  if (!(g.beta > 0.0)) {
    throw Error(ErrorCode::kRayAboveHorizon,
                "ray does not intersect the ground (depression angle " +
                    std::to_string(to_deg(g.beta)) + " deg)");
  }
  if (m.strict_shallow && g.beta < m.shallow_threshold) {
    throw Error(ErrorCode::kRayTooShallow,
                "depression angle " + std::to_string(to_deg(g.beta)) +
                    " deg is below the ranging threshold");
  }
  return g;
}

PlanePoint camera_frame_point(const MonoRangingModel& m, const RayGeometry& g) {
  const double h = m.effective_height();
  return {g.t * h / (g.root * std::sin(g.beta)), h / std::tan(g.beta)};
}

}  // namespace

void CalibrationCorrection::validate() const {
  if (!std::isfinite(delta_pitch) || !std::isfinite(delta_u0) ||
      !std::isfinite(delta_v0) || !std::isfinite(delta_height)) {
    throw Error(ErrorCode::kInvalidArgument, "corrections must be finite");
  }
  if (std::abs(delta_pitch) >= std::numbers::pi / 4.0) {
    throw Error(ErrorCode::kInvalidArgument, "pitch correction exceeds 45 deg");
  }
}

double MonoRangingModel::effective_pitch() const {
  return pose.pitch + (corrections ? corrections->delta_pitch : 0.0);
}
double MonoRangingModel::effective_height() const {
  return pose.height + (corrections ? corrections->delta_height : 0.0);
}
double MonoRangingModel::effective_u0() const {
  return intrinsics.u0 + (corrections ? corrections->delta_u0 : 0.0);
}
double MonoRangingModel::effective_v0() const {
  return intrinsics.v0 + (corrections ? corrections->delta_v0 : 0.0);
}

void MonoRangingModel::validate() const {
  intrinsics.validate();
  pose.validate();
  if (corrections) corrections->validate();
  const double pitch = effective_pitch();
  if (!(pitch > 0.0) || !(pitch < kHalfPi)) {
    throw Error(ErrorCode::kInvalidPitch, "effective pitch must lie in (0, 90) deg");
  }
  if (!(effective_height() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "effective height must be positive");
  }
}

double depression_angle(const MonoRangingModel& model, const PixelPoint& p) {
  return ray_geometry(model, p).beta;
}

bool is_too_shallow(const MonoRangingModel& model, const PixelPoint& p) {
  const double beta = depression_angle(model, p);
  return beta > 0.0 && beta < model.shallow_threshold;
}

double longitudinal_distance(const MonoRangingModel& model, const PixelPoint& p) {
  const RayGeometry g = checked_ray(model, p);
  return model.effective_height() / std::tan(g.beta);
}

double lateral_coordinate(const MonoRangingModel& model, const PixelPoint& p) {
  const RayGeometry g = checked_ray(model, p);
  return camera_frame_point(model, g).x;
}

PlanePoint locate_camera_frame(const MonoRangingModel& model, const PixelPoint& p) {
  return camera_frame_point(model, checked_ray(model, p));
}

PlanePoint locate(const MonoRangingModel& model, const PixelPoint& p) {
  return camera_to_world(model.pose, locate_camera_frame(model, p));
}

PixelPoint project_to_pixel(const MonoRangingModel& model, const PlanePoint& q) {
  model.validate();
  const PlanePoint c = world_to_camera(model.pose, q);
  if (!(c.y > 0.0)) {
    throw Error(ErrorCode::kBehindCamera, "ground point is behind the camera");
  }
  const double h = model.effective_height();
  const double beta = std::atan(h / c.y);
  const double gamma = model.effective_pitch() - beta;
  if (std::abs(gamma) >= kHalfPi) {
    throw Error(ErrorCode::kOffImagePlane, "ground point is outside the image plane");
  }
  const double s = model.intrinsics.fy * std::tan(gamma);
  const double a = model.intrinsics.pixel_aspect;
  const double root =
      std::sqrt(model.intrinsics.fx * model.intrinsics.fx + s * s * a * a);
  return {model.effective_u0() + c.x * root * std::sin(beta) / h,
          model.effective_v0() + s};
}

SensitivityCurve sensitivity_sweep(double height, AngleRad pitch_min,
                                   AngleRad pitch_max, AngleRad step) {
  const double lo = pitch_min.value;
  const double hi = pitch_max.value;
  if (!(height > 0.0) || !(lo > 0.0) || !(hi < kHalfPi) || !(lo < hi) ||
      !(step.value > 0.0)) {
    throw Error(ErrorCode::kInvalidRange,
                "require height > 0, 0 < pitch_min < pitch_max < 90 deg, step > 0");
  }
  // The small slack keeps an endpoint that lies on the grid up to rounding.
  const auto count =
      static_cast<std::size_t>(std::floor((hi - lo) / step.value + 1e-9)) + 1;
  SensitivityCurve curve;
  curve.height = height;
  curve.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double pitch = std::min(lo + static_cast<double>(i) * step.value, hi);
    curve.samples.push_back({pitch, height / std::tan(pitch)});
  }
  return curve;
}

void calibration_residuals(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                           const std::vector<ControlObservation>& observations,
                           const CalibrationCorrection& correction, bool with_height,
                           Eigen::VectorXd* residuals, Eigen::MatrixXd* jacobian) {
  MonoRangingModel model{intrinsics, pose, correction};
  const int n = static_cast<int>(observations.size());
  const int cols = with_height ? 4 : 3;
  residuals->resize(2 * n);
  if (jacobian) jacobian->setZero(2 * n, cols);

  const double c = std::cos(pose.yaw);
  const double s_yaw = std::sin(pose.yaw);
  const Eigen::Vector2d right(c, -s_yaw);
  const Eigen::Vector2d forward(s_yaw, c);
  const double h = model.effective_height();
  const double fy = intrinsics.fy;
  const double a2 = intrinsics.pixel_aspect * intrinsics.pixel_aspect;

  for (int i = 0; i < n; ++i) {
    const auto& obs = observations[static_cast<std::size_t>(i)];
    const RayGeometry g = ray_geometry(model, obs.pixel);
    if (!(g.beta > 0.0)) {
      throw Error(ErrorCode::kRayAboveHorizon,
                  "control point " + std::to_string(i) + " lies above the horizon");
    }
    const PlanePoint cam = camera_frame_point(model, g);
    const PlanePoint world = camera_to_world(pose, cam);
    residuals->segment<2>(2 * i) << world.x - obs.world.x, world.y - obs.world.y;
    if (!jacobian) continue;

    const double sin_b = std::sin(g.beta);
    const double cos_b = std::cos(g.beta);
    const double dbeta_dv0 = fy / (fy * fy + g.s * g.s);
    const double dy_dbeta = -h / (sin_b * sin_b);
    const double dx_dbeta = -g.t * h * cos_b / (g.root * sin_b * sin_b);
    // d/ds of the root in the lateral denominator; s = v - v0, ds/dv0 = -1.
    const double dx_ds = -g.t * h * g.s * a2 / (g.root * g.root * g.root * sin_b);

    const Eigen::Vector2d d_pitch = dx_dbeta * right + dy_dbeta * forward;
    const Eigen::Vector2d d_u0 = (-h / (g.root * sin_b)) * right;
    const Eigen::Vector2d d_v0 =
        (dx_dbeta * dbeta_dv0 - dx_ds) * right + (dy_dbeta * dbeta_dv0) * forward;
    jacobian->block<2, 1>(2 * i, 0) = d_pitch;
    jacobian->block<2, 1>(2 * i, 1) = d_u0;
    jacobian->block<2, 1>(2 * i, 2) = d_v0;
    if (with_height) {
      jacobian->block<2, 1>(2 * i, 3) = (cam.x / h) * right + (cam.y / h) * forward;
    }
  }
}

namespace {

class CalibrationProblem : public LeastSquaresProblem {
 public:
  CalibrationProblem(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                     const std::vector<ControlObservation>& observations,
                     bool with_height)
      : intrinsics_(intrinsics),
        pose_(pose),
        observations_(observations),
        with_height_(with_height) {}

  int num_parameters() const override { return with_height_ ? 4 : 3; }

  double cost() const override {
    Eigen::VectorXd r;
    try {
      calibration_residuals(intrinsics_, pose_, observations_, state_, with_height_, &r,
                            nullptr);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    return r.squaredNorm();
  }

  NormalEquations linearize() const override {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    calibration_residuals(intrinsics_, pose_, observations_, state_, with_height_, &r, &j);
    NormalEquations eq;
    eq.dim = num_parameters();
    const Eigen::MatrixXd jtj = j.transpose() * j;
    for (int row = 0; row < eq.dim; ++row) {
      for (int col = 0; col < eq.dim; ++col) {
        eq.hessian.emplace_back(row, col, jtj(row, col));
      }
    }
    eq.gradient = j.transpose() * r;
    eq.cost = r.squaredNorm();
    return eq;
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    previous_ = state_;
    state_.delta_pitch += delta[0];
    state_.delta_u0 += delta[1];
    state_.delta_v0 += delta[2];
    if (with_height_) state_.delta_height += delta[3];
  }

  void undo_step() override { state_ = previous_; }

  double parameter_norm() const override {
    return std::sqrt(state_.delta_pitch * state_.delta_pitch +
                     state_.delta_u0 * state_.delta_u0 +
                     state_.delta_v0 * state_.delta_v0 +
                     state_.delta_height * state_.delta_height) +
           1.0;
  }

  const CalibrationCorrection& state() const { return state_; }

 private:
  CameraIntrinsics intrinsics_;
  CameraPose pose_;
  const std::vector<ControlObservation>& observations_;
  bool with_height_;
  CalibrationCorrection state_;
  CalibrationCorrection previous_;
};

void check_calibration_geometry(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                                const std::vector<ControlObservation>& observations,
                                bool with_height, double max_condition) {
  // Image points must span two dimensions.
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& o : observations) mean += Eigen::Vector2d(o.pixel.u, o.pixel.v);
  mean /= static_cast<double>(observations.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& o : observations) {
    const Eigen::Vector2d d = Eigen::Vector2d(o.pixel.u, o.pixel.v) - mean;
    cov += d * d.transpose();
  }
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  if (!(ev[1] > 0.0) || ev[0] <= 1e-12 * ev[1]) {
    throw Error(ErrorCode::kDegenerateGeometry, "control points are collinear in the image");
  }

  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  calibration_residuals(intrinsics, pose, observations, {}, with_height, &r, &j);
  Eigen::MatrixXd jtj = j.transpose() * j;
  const Eigen::VectorXd scale = jtj.diagonal().cwiseSqrt();
  if ((scale.array() <= 0.0).any()) {
    throw Error(ErrorCode::kDegenerateGeometry, "a correction is unobservable");
  }
  jtj = scale.cwiseInverse().asDiagonal() * jtj * scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(jtj).eigenvalues();
  if (!(eig[0] > 0.0) || eig[eig.size() - 1] / eig[0] > max_condition) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "normal equations are ill-conditioned for the given control points");
  }
}

}  // namespace

CalibrationResult fit_calibration(const CameraIntrinsics& intrinsics,
                                  const CameraPose& pose,
                                  const std::vector<ControlObservation>& observations,
                                  const CalibrationOptions& options) {
  intrinsics.validate();
  pose.validate();
  const std::size_t required = options.estimate_height ? 4 : 3;
  if (observations.size() < required) {
    throw Error(ErrorCode::kInsufficientPoints,
                "calibration needs at least " + std::to_string(required) + " points");
  }
  check_calibration_geometry(intrinsics, pose, observations, options.estimate_height,
                             options.max_condition);

  CalibrationProblem problem(intrinsics, pose, observations, options.estimate_height);
  const LmSummary summary = solve_levenberg_marquardt(problem, options.solver);
  if (!summary.converged) {
    throw Error(ErrorCode::kNoConvergence,
                "calibration did not converge in " + std::to_string(summary.iterations) +
                    " iterations");
  }
  CalibrationResult result;
  result.correction = problem.state();
  result.correction.validate();
  result.rms = std::sqrt(summary.final_cost / static_cast<double>(observations.size()));
  result.iterations = summary.iterations;
  return result;
}

}  // namespace planar
