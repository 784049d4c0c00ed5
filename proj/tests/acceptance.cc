// Acceptance run: one PASS/FAIL line per criterion at its stated tolerance
// and runtime budget. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "planar/cli.h"
#include "planar/error.h"
#include "planar/homography.h"
#include "planar/mono_ranging.h"
#include "planar/mosaic_ba.h"
#include "planar/sim_harness.h"
#include "planar/stereo_ranging.h"
#include "scenarios.h"

namespace planar {
namespace {

using Dec50 = boost::multiprecision::cpp_dec_float_50;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

Camera hd_camera(double height, double pitch_deg, double yaw_deg = 0.0,
                 Eigen::Vector2d position = Eigen::Vector2d::Zero()) {
  CameraPose p;
  p.height = height;
  p.pitch = deg(pitch_deg);
  p.yaw = deg(yaw_deg);
  p.position = position;
  return Camera{scenarios::hd_intrinsics(), p};
}

// H / tan(alpha) in 50-digit decimal arithmetic.
double exact_distance(double height, double alpha_deg) {
  const Dec50 pi = boost::math::constants::pi<Dec50>();
  const Dec50 a = Dec50(alpha_deg) * pi / 180;
  return static_cast<double>(Dec50(height) / tan(a));
}

Outcome distance_anchor() {
  Outcome o;
  const Camera c = hd_camera(8.24, 1.679);
  const double y = longitudinal_distance({c.intrinsics, c.pose, {}}, {960.0, 540.0});
  o.note("Y = " + fmt("%.5f", y) + " m");
  o.require(std::abs(y - 281.11) <= 0.05, "|Y - 281.11| <= 0.05");
  return o;
}

Outcome sensitivity_curve() {
  Outcome o;
  std::ostringstream out;
  std::ostringstream err;
  const char* argv[] = {"planar_measure", "sensitivity", "--height", "8.24", "--alpha-min", "0.5",
                        "--alpha-max", "30"};
  const int code = run_cli(8, argv, out, err);
  o.require(code == 0, "sensitivity command exits 0");
  std::istringstream csv(out.str());
  std::string line;
  std::getline(csv, line);
  std::vector<double> printed;
  while (std::getline(csv, line)) printed.push_back(std::stod(line.substr(line.find(',') + 1)));

  const SensitivityCurve curve = sensitivity_sweep(8.24, {deg(0.5)}, {deg(30.0)}, {deg(0.001)});
  o.require(printed.size() == curve.samples.size(), "command rows match the sweep");
  const auto& s = curve.samples;
  double worst_identity = 0.0;
  bool decreasing = true;
  bool convex = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst_identity = std::max(worst_identity, std::abs(s[i].distance * std::tan(s[i].pitch) - 8.24) / 8.24);
    if (i > 0 && !(s[i].distance < s[i - 1].distance)) decreasing = false;
    if (i > 0 && i + 1 < s.size() && !(s[i + 1].distance - 2 * s[i].distance + s[i - 1].distance > 0)) {
      convex = false;
    }
  }
  for (std::size_t i = 1; i < printed.size(); ++i) {
    if (!(printed[i] < printed[i - 1])) decreasing = false;
  }
  const double first_ref = exact_distance(8.24, 0.5);
  const double last_ref = exact_distance(8.24, 30.0);
  const double first_rel = std::abs(s.front().distance - first_ref) / first_ref;
  const double last_rel = std::abs(s.back().distance - last_ref) / last_ref;
  o.note(std::to_string(s.size()) + " samples, Y(0.5) = " + fmt("%.4f", s.front().distance) +
         ", Y(30) = " + fmt("%.6f", s.back().distance) + ", max |Y tan a - H|/H = " +
         fmt("%.2e", worst_identity));
  o.require(decreasing, "strictly decreasing");
  o.require(convex, "convex");
  o.require(worst_identity <= 1e-12, "Y tan a = H within 1e-12");
  o.require(first_rel <= 1e-9 && last_rel <= 1e-9, "endpoints within 1e-9 of 50-digit reference");
  return o;
}

Outcome round_trip() {
  Outcome o;
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 20000;
  int failures = 0;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    MonoRangingModel m;
    m.intrinsics = {400 + 2000 * unit(rng), 0, 2000 * unit(rng), 1500 * unit(rng),
                    0.9 + 0.2 * unit(rng)};
    m.intrinsics.fy = m.intrinsics.fx * m.intrinsics.pixel_aspect;
    m.pose.height = 1 + 60 * unit(rng);
    m.pose.pitch = deg(2 + 80 * unit(rng));
    m.pose.yaw = deg(-180 + 360 * unit(rng));
    m.pose.position = {-500 + 1000 * unit(rng), -500 + 1000 * unit(rng)};
    const double y = m.pose.height * (2 + 48 * unit(rng));
    const PlanePoint w = camera_to_world(m.pose, {y * (-1 + 2 * unit(rng)), y});
    try {
      const PlanePoint back = locate(m, project_to_pixel(m, w));
      const double err = distance(back, w);
      worst = std::max(worst, err);
      if (!(err <= 1e-9)) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  o.note(std::to_string(n) + " configurations, worst " + fmt("%.2e", worst) + " m, " +
         std::to_string(failures) + " failures");
  o.require(failures == 0, "locate(project(q)) = q within 1e-9 m everywhere");
  return o;
}

Outcome mono_claim() {
  Outcome o;
  const int trials = 1000;
  const ErrorReport steep = evaluate_mono(scenarios::mono_scene(30.0), scenarios::mono_noise(), trials);
  const ErrorReport shallow = evaluate_mono(scenarios::mono_scene(2.0), scenarios::mono_noise(), trials);
  const double ratio = shallow.abs.median / steep.abs.median;
  o.note("median at 30 deg " + fmt("%.4f", steep.abs.median) + " m, at 2 deg " +
         fmt("%.3f", shallow.abs.median) + " m, ratio " + fmt("%.1f", ratio));
  o.require(steep.abs.median <= 1.0, "median <= 1.0 m at 30 deg");
  o.require(ratio >= 50.0, "2 deg median >= 50x the 30 deg median");
  o.require(steep.failures == 0, "no rejected observations at 30 deg");
  return o;
}

Outcome stereo_claim() {
  Outcome o;
  const ErrorReport r = evaluate_stereo(scenarios::stereo_scene(), scenarios::stereo_noise(), 1000);
  o.note("median " + fmt("%.4f", r.abs.median) + " m, median relative " +
         fmt("%.5f", r.rel.median) + " over " + std::to_string(r.points.size()) + " estimates");
  o.require(r.abs.median <= 0.5, "median absolute error <= 0.5 m");
  o.require(r.rel.median <= 0.05, "median relative error <= 5%");
  o.require(r.failures == 0, "no rejected estimates");

  // Pitch perturbation of +-2 deg leaves every estimate unchanged.
  const SceneSpec spec = scenarios::stereo_scene();
  const StereoRig rig = rig_from_cameras(spec.cameras[0].camera, spec.cameras[1].camera);
  bool identical = true;
  for (const auto& q : spec.explicit_points) {
    const PixelPoint pa = project_bearing(rig.cam_a, q);
    const PixelPoint pb = project_bearing(rig.cam_b, q);
    const TriangleSolution base = range_target(rig, pa, pb);
    for (double dp : {-2.0, 2.0}) {
      StereoRig moved = rig;
      moved.cam_a.pose.pitch += deg(dp);
      moved.cam_b.pose.pitch += deg(dp);
      const TriangleSolution s = range_target(moved, pa, pb);
      identical = identical && s.dist_a == base.dist_a && s.dist_b == base.dist_b &&
                  s.target.x == base.target.x && s.target.y == base.target.y;
    }
  }
  NoiseModel pitch_only;
  pitch_only.pitch_sigma = deg(2.0);
  pitch_only.seed = 17;
  const ErrorReport clean = evaluate_stereo(spec, NoiseModel{}, 50);
  const ErrorReport shaken = evaluate_stereo(spec, pitch_only, 50);
  for (std::size_t i = 0; i < clean.points.size(); ++i) {
    identical = identical && clean.points[i].estimate.x == shaken.points[i].estimate.x &&
                clean.points[i].estimate.y == shaken.points[i].estimate.y;
  }
  o.require(identical, "pitch perturbation changes output by exactly 0");
  return o;
}

Outcome stitching_claim() {
  Outcome o;
  const SyntheticMosaic m = generate_ba_graph(scenarios::ba_scene(), scenarios::ba_noise(2024));
  const BaSolution s = solve(m.graph);
  const HoldoutReport h = evaluate(s, m.holdout);
  bool monotone = true;
  for (std::size_t i = 1; i < s.cost_trace.size(); ++i) {
    monotone = monotone && s.cost_trace[i] <= s.cost_trace[i - 1];
  }
  o.note(std::to_string(m.graph.images.size()) + " images, " + std::to_string(m.graph.edges.size()) +
         " edges, " + std::to_string(s.iterations) + " iterations, max edge RMS " +
         fmt("%.4f", s.max_edge_rms()) + " px, holdout RMS " + fmt("%.4f", h.rms.value_or(-1)) + " m");
  o.require(m.graph.images.size() == 40, "40 images");
  o.require(s.converged, "converged");
  o.require(s.max_edge_rms() < 0.5, "max reprojection RMS < 0.5 px");
  o.require(h.rms && *h.rms < 0.3, "holdout RMS < 0.3 m");
  o.require(monotone, "accepted-step cost trace monotone");
  return o;
}

Outcome numerical_hygiene() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Bundle-adjustment residual Jacobian.
  double worst_ba = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Camera c = hd_camera(5 + 50 * unit(rng), 15 + 70 * unit(rng), -180 + 360 * unit(rng),
                               {-50 + 100 * unit(rng), -50 + 100 * unit(rng)});
    const Eigen::Matrix3d h = bev_from_camera(c.intrinsics, c.pose, 1.0).matrix();
    std::vector<Eigen::Vector2d> px;
    for (int k = 0; k < 12; ++k) px.emplace_back(1920 * unit(rng), 1080 * unit(rng));
    const LocalChart chart = LocalChart::for_points(px);
    Eigen::Matrix<double, 2, 8> analytic;
    chart.project(h, px[0], &analytic);
    Eigen::Matrix<double, 2, 8> numeric;
    for (int k = 0; k < 8; ++k) {
      Eigen::Matrix<double, 8, 1> d = Eigen::Matrix<double, 8, 1>::Zero();
      d[k] = 1e-6;
      numeric.col(k) = (chart.project(chart.retract(h, d), px[0], nullptr) -
                        chart.project(chart.retract(h, -d), px[0], nullptr)) / 2e-6;
    }
    worst_ba = std::max(worst_ba, (numeric - analytic).norm() / analytic.norm());
  }

  // Calibration residual Jacobian.
  double worst_cal = 0.0;
  for (int t = 0; t < 200; ++t) {
    MonoRangingModel m;
    m.intrinsics = {500 + 1500 * unit(rng), 0, 800 * unit(rng), 600 * unit(rng), 0.9 + 0.2 * unit(rng)};
    m.intrinsics.fy = m.intrinsics.fx * m.intrinsics.pixel_aspect;
    m.pose.height = 4 + 10 * unit(rng);
    m.pose.pitch = deg(8 + 40 * unit(rng));
    m.pose.yaw = deg(360 * unit(rng));
    const bool with_height = t % 2 == 1;
    const CalibrationCorrection c{deg(-1 + 2 * unit(rng)), -10 + 20 * unit(rng),
                                  -10 + 20 * unit(rng), with_height ? -0.2 + 0.4 * unit(rng) : 0.0};
    std::vector<ControlObservation> obs;
    for (int k = 0; k < 5; ++k) {
      const double y = m.pose.height * (2 + 8 * unit(rng));
      const PlanePoint w = camera_to_world(m.pose, {y * (-0.5 + unit(rng)), y});
      obs.push_back({project_to_pixel(m, w), {w.x + unit(rng), w.y - unit(rng)}});
    }
    Eigen::VectorXd r0;
    Eigen::MatrixXd jac;
    calibration_residuals(m.intrinsics, m.pose, obs, c, with_height, &r0, &jac);
    const double scales[4] = {deg(1.0), 1.0, 1.0, 1.0};
    for (int k = 0; k < jac.cols(); ++k) {
      const double step = 1e-6 * scales[k];
      auto shifted = [&](double s) {
        CalibrationCorrection d = c;
        double* fields[4] = {&d.delta_pitch, &d.delta_u0, &d.delta_v0, &d.delta_height};
        *fields[k] += s;
        Eigen::VectorXd r;
        calibration_residuals(m.intrinsics, m.pose, obs, d, with_height, &r, nullptr);
        return r;
      };
      const Eigen::VectorXd fd = (shifted(step) - shifted(-step)) / (2 * step);
      worst_cal = std::max(worst_cal, (fd - jac.col(k)).norm() / std::max(1.0, jac.col(k).norm()));
    }
  }

  // DLT on noise-free minimal sets with no three points near a common line:
  // every triangle covers at least 1% of the sampling square.
  auto triangle_area = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    const Eigen::Vector2d u = b - a;
    const Eigen::Vector2d v = c - a;
    return 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
  };
  rng.seed(8);
  double worst_dlt = 0.0;
  int dlt_sets = 0;
  while (dlt_sets < 200) {
    Eigen::Matrix3d m;
    m << 1 + 0.2 * (2 * unit(rng) - 1), 0.2 * (2 * unit(rng) - 1), 50 * (2 * unit(rng) - 1),
        0.2 * (2 * unit(rng) - 1), 1 + 0.2 * (2 * unit(rng) - 1), 50 * (2 * unit(rng) - 1),
        2e-4 * (2 * unit(rng) - 1), 2e-4 * (2 * unit(rng) - 1), 1.0;
    std::vector<Eigen::Vector2d> src;
    for (int k = 0; k < 4; ++k) src.emplace_back(4000 * unit(rng), 4000 * unit(rng));
    double min_area = 1e300;
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        for (int c = b + 1; c < 4; ++c) min_area = std::min(min_area, triangle_area(src[a], src[b], src[c]));
      }
    }
    if (min_area < 0.01 * 4000.0 * 4000.0) continue;
    std::vector<Correspondence> corr;
    for (const auto& p : src) corr.push_back({p, (m * p.homogeneous()).hnormalized()});
    const Estimate e = estimate_dlt(corr);
    worst_dlt = std::max(worst_dlt, (e.homography.matrix() - Homography::normalize(m)).norm());
    ++dlt_sets;
  }

  // Law of sines on every solved triangle.
  int triangles = 0;
  double worst_sines = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const double d = 1 + 500 * unit(rng);
    const double a = deg(1 + 170 * unit(rng));
    const double b = deg(1 + (178 - to_deg(a)) * unit(rng));
    try {
      const TriangleSolution s = solve_triangle(d, {a}, {b});
      const double k = d / std::sin(s.gamma);
      worst_sines = std::max({worst_sines, std::abs(s.dist_a / std::sin(s.beta) - k) / k,
                              std::abs(s.dist_b / std::sin(s.alpha) - k) / k,
                              std::abs(s.alpha + s.beta + s.gamma - std::numbers::pi)});
      ++triangles;
    } catch (const Error&) {
      // Near-degenerate apex.
    }
  }

  // Bit-identical repeats of every seeded generator and evaluator.
  auto same_report = [](const ErrorReport& x, const ErrorReport& y) {
    if (x.points.size() != y.points.size()) return false;
    for (std::size_t i = 0; i < x.points.size(); ++i) {
      if (x.points[i].estimate.x != y.points[i].estimate.x ||
          x.points[i].estimate.y != y.points[i].estimate.y) {
        return false;
      }
    }
    return true;
  };
  bool deterministic =
      same_report(evaluate_mono(scenarios::mono_scene(10.0), scenarios::mono_noise(), 200, {1}),
                  evaluate_mono(scenarios::mono_scene(10.0), scenarios::mono_noise(), 200, {3})) &&
      same_report(evaluate_stereo(scenarios::stereo_scene(), scenarios::stereo_noise(), 200),
                  evaluate_stereo(scenarios::stereo_scene(), scenarios::stereo_noise(), 200));
  const SyntheticMosaic g1 = generate_ba_graph(scenarios::ba_scene(2, 3), scenarios::ba_noise(5));
  const SyntheticMosaic g2 = generate_ba_graph(scenarios::ba_scene(2, 3), scenarios::ba_noise(5));
  const BaSolution s1 = solve(g1.graph);
  const BaSolution s2 = solve(g2.graph);
  deterministic = deterministic && s1.cost_trace == s2.cost_trace;
  for (const auto& [id, h] : s1.homographies) {
    deterministic = deterministic && h.matrix() == s2.homographies.at(id).matrix();
  }

  o.note("BA Jacobian " + fmt("%.1e", worst_ba) + ", calibration Jacobian " + fmt("%.1e", worst_cal) +
         ", DLT " + fmt("%.1e", worst_dlt) + " over " + std::to_string(dlt_sets) + " sets, law of sines " +
         fmt("%.1e", worst_sines) + " over " + std::to_string(triangles) + " triangles");
  o.require(worst_ba <= 1e-5, "BA Jacobian within 1e-5");
  o.require(worst_cal <= 1e-5, "calibration Jacobian within 1e-5");
  o.require(dlt_sets >= 100 && worst_dlt <= 1e-10, "DLT exact within 1e-10");
  o.require(triangles >= 100 && worst_sines <= 1e-12, "law of sines");
  o.require(deterministic, "bit-identical repeats");
  return o;
}

Outcome euclidean_oracle() {
  Outcome o;
  const StereoRig rig = rig_from_cameras(hd_camera(10, 5, 0, {0, 0}), hd_camera(10, 5, 0, {50, 0}));
  const PlanePoint q{20.0, 60.0};
  const TriangleSolution s = range_target(rig, project_bearing(rig.cam_a, q), project_bearing(rig.cam_b, q));
  const double ea = std::abs(s.dist_a - std::sqrt(4000.0)) / std::sqrt(4000.0);
  const double eb = std::abs(s.dist_b - std::sqrt(4500.0)) / std::sqrt(4500.0);
  o.note("dist_a = " + fmt("%.6f", s.dist_a) + " m, dist_b = " + fmt("%.6f", s.dist_b) + " m");
  o.require(std::abs(s.dist_a - 63.246) < 5e-4 && std::abs(s.dist_b - 67.082) < 5e-4,
            "63.246 / 67.082 m");
  o.require(ea <= 1e-9 && eb <= 1e-9, "sqrt(4000), sqrt(4500) within 1e-9 relative");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace planar

int main() {
  using namespace planar;
  const std::vector<Criterion> criteria{
      {1, "distance anchor at 1.679 deg", 1.0, distance_anchor},
      {2, "sensitivity curve", 1.0, sensitivity_curve},
      {3, "project/locate round trip", 10.0, round_trip},
      {4, "monocular accuracy vs pitch", 30.0, mono_claim},
      {5, "stereo accuracy and pitch invariance", 30.0, stereo_claim},
      {6, "40-image bundle adjustment", 120.0, stitching_claim},
      {7, "numerical hygiene", 30.0, numerical_hygiene},
      {8, "stereo Euclidean oracle", 1.0, euclidean_oracle},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(seconds <= c.budget_s, "runtime <= " + fmt("%.0f", c.budget_s) + " s");
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
