#include "planar/homography.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "planar/error.h"

namespace planar {

Eigen::Matrix3d Homography::normalize(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kDegenerateHomography, "matrix has non-finite entries");
  }
  const double norm = m.norm();
  if (norm == 0.0) {
    throw Error(ErrorCode::kDegenerateHomography, "zero matrix");
  }
  Eigen::Matrix3d r = m;
  if (std::abs(norm - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
    r /= norm;
  }
  double sign_entry = r(2, 2);
  if (sign_entry == 0.0) {
    for (int i = 0; i < 9 && sign_entry == 0.0; ++i) sign_entry = r(i / 3, i % 3);
  }
  if (sign_entry < 0.0) r = -r;
  return r;
}

Homography::Homography(const Eigen::Matrix3d& m) : m_(normalize(m)) {
  if (!(std::abs(m_.determinant()) > 1e-12)) {
    throw Error(ErrorCode::kDegenerateHomography, "matrix is not invertible");
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Homography Homography::compose(const Homography& other) const {
  return Homography(m_ * other.m_);
}

Eigen::Vector2d apply(const Homography& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d x = h.matrix() * p.homogeneous();
  if (!(std::abs(x.z()) >= 1e-12)) {
    throw Error(ErrorCode::kPointAtInfinity, "point maps to infinity");
  }
  return x.hnormalized();
}

PlanePoint apply(const Homography& h, const PixelPoint& p) {
  const Eigen::Vector2d r = apply(h, Eigen::Vector2d(p.u, p.v));
  return {r.x(), r.y()};
}

namespace {

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d hartley_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const double s = std::numbers::sqrt2 / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

struct DltSolution {
  Eigen::Matrix3d m;
  bool condition_warning;
};

DltSolution solve_dlt(const std::vector<Correspondence>& corrs,
                      const std::vector<int>& subset) {
  std::vector<Eigen::Vector2d> src;
  std::vector<Eigen::Vector2d> dst;
  src.reserve(subset.size());
  dst.reserve(subset.size());
  for (int i : subset) {
    src.push_back(corrs[static_cast<std::size_t>(i)].src);
    dst.push_back(corrs[static_cast<std::size_t>(i)].dst);
  }
  const Eigen::Matrix3d ts = hartley_transform(src);
  const Eigen::Matrix3d td = hartley_transform(dst);

  const int n = static_cast<int>(src.size());
  Eigen::Matrix<double, Eigen::Dynamic, 9> a =
      Eigen::Matrix<double, Eigen::Dynamic, 9>::Zero(std::max(2 * n, 9), 9);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d p = (ts * src[i].homogeneous()).hnormalized();
    const Eigen::Vector2d q = (td * dst[i].homogeneous()).hnormalized();
    a.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
    a.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv[7] - sv[8] <= 1e-10 * sv[0]) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "homography is not uniquely determined by the correspondences");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  return {td.inverse() * hn * ts, sv[7] < 1e-7 * sv[0]};
}

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d w = c - a;
  return std::abs(u.x() * w.y() - u.y() * w.x()) <= 1e-10 * u.norm() * w.norm();
}

bool sample_degenerate(const std::vector<Correspondence>& corrs, const std::array<int, 4>& s) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        const auto& a = corrs[static_cast<std::size_t>(s[i])];
        const auto& b = corrs[static_cast<std::size_t>(s[j])];
        const auto& c = corrs[static_cast<std::size_t>(s[k])];
        if (collinear(a.src, b.src, c.src) || collinear(a.dst, b.dst, c.dst)) return true;
      }
    }
  }
  return false;
}

double transfer_error(const Eigen::Matrix3d& m, const Correspondence& c) {
  const Eigen::Vector3d x = m * c.src.homogeneous();
  if (!(std::abs(x.z()) >= 1e-12 * x.norm())) return std::numeric_limits<double>::infinity();
  return (x.hnormalized() - c.dst).norm();
}

std::vector<int> inlier_set(const Eigen::Matrix3d& m, const std::vector<Correspondence>& corrs,
                            double threshold) {
  std::vector<int> inliers;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (transfer_error(m, corrs[i]) < threshold) inliers.push_back(static_cast<int>(i));
  }
  return inliers;
}

Estimate finish(const std::vector<Correspondence>& corrs, const std::vector<int>& inliers,
                const DltSolution& sol) {
  Estimate e{Homography(sol.m), {}};
  e.report.inlier_count = static_cast<int>(inliers.size());
  e.report.condition_warning = sol.condition_warning;
  e.report.inliers.assign(corrs.size(), false);
  double sum_sq = 0.0;
  for (int i : inliers) {
    e.report.inliers[static_cast<std::size_t>(i)] = true;
    const double err = transfer_error(e.homography.matrix(), corrs[static_cast<std::size_t>(i)]);
    sum_sq += err * err;
  }
  e.report.rms_error = inliers.empty() ? 0.0 : std::sqrt(sum_sq / static_cast<double>(inliers.size()));
  return e;
}

}  // namespace

Estimate estimate_dlt(const std::vector<Correspondence>& correspondences,
                      const std::optional<RansacConfig>& robust) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientPoints, "DLT needs at least 4 correspondences");
  }
  for (const auto& c : correspondences) {
    if (!c.src.allFinite() || !c.dst.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "correspondences must be finite");
    }
  }
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  if (!robust) return finish(correspondences, all, solve_dlt(correspondences, all));

  const RansacConfig& cfg = *robust;
  if (!(cfg.threshold > 0.0) || !(cfg.confidence > 0.0) || !(cfg.confidence < 1.0) ||
      cfg.max_iterations <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid RANSAC configuration");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> best;
  double needed = static_cast<double>(cfg.max_iterations);
  for (int iter = 0; iter < cfg.max_iterations && iter < needed; ++iter) {
    std::array<int, 4> s{};
    for (int k = 0; k < 4; ++k) {
      int idx = 0;
      do {
        idx = pick(rng);
      } while (std::find(s.begin(), s.begin() + k, idx) != s.begin() + k);
      s[static_cast<std::size_t>(k)] = idx;
    }
    if (sample_degenerate(correspondences, s)) continue;
    DltSolution model;
    try {
      model = solve_dlt(correspondences, {s.begin(), s.end()});
    } catch (const Error&) {
      continue;
    }
    std::vector<int> inliers = inlier_set(model.m, correspondences, cfg.threshold);
    if (inliers.size() > best.size()) {
      best = std::move(inliers);
      const double w = static_cast<double>(best.size()) / n;
      const double miss = 1.0 - std::pow(w, 4.0);
      if (miss <= 0.0) {
        needed = 0.0;
      } else {
        needed = std::log(1.0 - cfg.confidence) / std::log(miss);
      }
    }
  }
  if (best.size() < 4) {
    throw Error(ErrorCode::kNoConsensus, "RANSAC found fewer than 4 inliers");
  }
  // Refit on the consensus set until it stops changing.
  DltSolution sol = solve_dlt(correspondences, best);
  for (int round = 0; round < 5; ++round) {
    std::vector<int> refined = inlier_set(sol.m, correspondences, cfg.threshold);
    if (refined == best || refined.size() < 4) break;
    best = std::move(refined);
    sol = solve_dlt(correspondences, best);
  }
  return finish(correspondences, best, sol);
}

Homography bev_from_camera(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                           double ground_scale) {
  intrinsics.validate();
  pose.validate();
  if (!(pose.pitch > 0.0) || !(pose.pitch < std::numbers::pi / 2.0)) {
    throw Error(ErrorCode::kInvalidPitch, "pitch must lie in (0, 90) deg");
  }
  if (!(ground_scale > 0.0) || !std::isfinite(ground_scale)) {
    throw Error(ErrorCode::kInvalidArgument, "ground scale must be positive");
  }
  const double h = pose.height;
  const double sa = std::sin(pose.pitch);
  const double ca = std::cos(pose.pitch);
  const double fx = intrinsics.fx;
  const double fy = intrinsics.fy;
  const double u0 = intrinsics.u0;
  const double v0 = intrinsics.v0;

  // Pinhole ray (x, y) = ((u - u0) / f_x, (v - v0) / f_y) hitting the ground
  // at H (x, cos a + y sin a) / (sin a - y cos a), in the camera frame.
  Eigen::Matrix3d camera;
  camera << h / fx, 0.0, -h * u0 / fx,
            0.0, h * sa / fy, h * (ca - sa * v0 / fy),
            0.0, -ca / fy, sa + ca * v0 / fy;

  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  Eigen::Matrix3d to_world;
  to_world << c, s, pose.position.x(),
              -s, c, pose.position.y(),
              0.0, 0.0, 1.0;
  const Eigen::Matrix3d scale =
      Eigen::Vector3d(ground_scale, ground_scale, 1.0).asDiagonal();
  return Homography(scale * to_world * camera);
}

Estimate metric_rectify(const std::vector<ControlPoint>& controls,
                        const std::optional<RansacConfig>& robust) {
  std::vector<Correspondence> corrs;
  corrs.reserve(controls.size());
  for (const auto& c : controls) {
    corrs.push_back({{c.pixel.u, c.pixel.v}, {c.world.x, c.world.y}});
  }
  return estimate_dlt(corrs, robust);
}

}  // namespace planar
