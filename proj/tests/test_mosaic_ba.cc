#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "planar/homography.h"
#include "planar/mosaic_ba.h"
#include "planar/sim_harness.h"
#include "scenarios.h"
#include "test_util.h"

namespace planar {
namespace {

using testing::expect_error;
using testing::intrinsics;
using testing::pose;

constexpr int kWidth = 1200;
constexpr int kHeight = 900;

Camera camera(double x, double y, double yaw_deg, double h = 30.0, double pitch_deg = 50.0) {
  return Camera{intrinsics(900.0, 600.0, 450.0), pose(h, pitch_deg, yaw_deg, {x, y})};
}

Homography truth_of(const Camera& c) { return bev_from_camera(c.intrinsics, c.pose, 1.0); }

bool inside(const Eigen::Vector2d& p) {
  return p.x() >= 0 && p.x() <= kWidth && p.y() >= 0 && p.y() <= kHeight;
}

// Two overlapping views with exact matches; image "a" carries its true
// homography, "b" a perturbed one.
struct TwoViews {
  CorrespondenceGraph graph;
  Homography truth_a;
  Homography truth_b;
};

TwoViews two_views(int match_count, bool anchor_a = true) {
  const Camera ca = camera(0, 0, 0);
  const Camera cb = camera(18, 4, 12);
  TwoViews tv{{}, truth_of(ca), truth_of(cb)};
  const Homography ia = tv.truth_a.inverse();
  const Homography ib = tv.truth_b.inverse();
  MatchEdge edge{"a", "b", {}};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> x(-10.0, 40.0);
  std::uniform_real_distribution<double> y(20.0, 60.0);
  while (static_cast<int>(edge.matches.size()) < match_count) {
    const Eigen::Vector2d g{x(rng), y(rng)};
    const Eigen::Vector2d pa = apply(ia, g);
    const Eigen::Vector2d pb = apply(ib, g);
    if (!inside(pa) || !inside(pb)) continue;
    edge.matches.push_back({{pa.x(), pa.y()}, {pb.x(), pb.y()}});
  }
  Eigen::Matrix3d skew = Eigen::Matrix3d::Identity();
  skew(0, 2) = 3.0;
  skew(1, 0) = 0.01;
  tv.graph.images = {{"a", std::nullopt, tv.truth_a, anchor_a},
                     {"b", std::nullopt, Homography(tv.truth_b.matrix() * skew), false}};
  tv.graph.edges = {edge};
  return tv;
}

double map_rms(const Homography& est, const Homography& truth) {
  double sum = 0.0;
  int n = 0;
  for (int u = 0; u <= kWidth; u += 200) {
    for (int v = 0; v <= kHeight; v += 150) {
      sum += (apply(est, Eigen::Vector2d(u, v)) - apply(truth, Eigen::Vector2d(u, v))).squaredNorm();
      ++n;
    }
  }
  return std::sqrt(sum / n);
}

TEST(LocalChart, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Camera c = camera(-50 + 100 * unit(rng), -50 + 100 * unit(rng), -180 + 360 * unit(rng),
                            5 + 50 * unit(rng), 15 + 70 * unit(rng));
    const Eigen::Matrix3d h = truth_of(c).matrix();
    std::vector<Eigen::Vector2d> pixels;
    for (int k = 0; k < 12; ++k) pixels.emplace_back(kWidth * unit(rng), kHeight * unit(rng));
    const LocalChart chart = LocalChart::for_points(pixels);
    const Eigen::Vector2d p = pixels[trial % pixels.size()];

    Eigen::Matrix<double, 2, 8> analytic;
    chart.project(h, p, &analytic);
    Eigen::Matrix<double, 2, 8> numeric;
    const double step = 1e-6;
    for (int k = 0; k < 8; ++k) {
      Eigen::Matrix<double, 8, 1> d = Eigen::Matrix<double, 8, 1>::Zero();
      d[k] = step;
      const Eigen::Vector2d plus = chart.project(chart.retract(h, d), p, nullptr);
      const Eigen::Vector2d minus = chart.project(chart.retract(h, -d), p, nullptr);
      numeric.col(k) = (plus - minus) / (2.0 * step);
    }
    const double rel = (numeric - analytic).norm() / analytic.norm();
    worst = std::max(worst, rel);
    EXPECT_LT(rel, 1e-5) << "trial " << trial;
  }
  std::printf("worst relative Jacobian mismatch over 200 configurations: %.3g\n", worst);
}

TEST(LocalChart, RetractAtZeroIsIdentity) {
  const Eigen::Matrix3d h = truth_of(camera(3, 4, 20)).matrix();
  const LocalChart chart = LocalChart::for_points({{0, 0}, {100, 50}, {30, 700}});
  const Eigen::Matrix3d r = chart.retract(h, Eigen::Matrix<double, 8, 1>::Zero());
  EXPECT_LT((r - Homography::normalize(h)).norm(), 1e-15);
}

TEST(Graph, Validation) {
  TwoViews tv = two_views(10);
  tv.graph.validate();

  CorrespondenceGraph g = tv.graph;
  g.edges[0].image_b = "missing";
  expect_error(ErrorCode::kUnknownImage, [&] { g.validate(); });

  g = tv.graph;
  g.images.push_back({"c", std::nullopt, std::nullopt, false});
  expect_error(ErrorCode::kSolveDisconnected, [&] { g.validate(); });

  g = tv.graph;
  g.images[0].anchor = false;
  expect_error(ErrorCode::kNoGauge, [&] { g.validate(); });

  g.images[1].anchor = true;
  g.images[0].anchor = true;
  expect_error(ErrorCode::kNoGauge, [&] { g.validate(); });

  // Four controls spread over two images fix the gauge as well.
  g.images[0].anchor = false;
  g.images[1].anchor = false;
  for (int k = 0; k < 4; ++k) {
    g.controls.push_back({k % 2 ? "a" : "b", {100.0 * k, 200.0}, {1.0 * k, 30.0}});
  }
  g.validate();

  expect_error(ErrorCode::kInvalidArgument, [] { CorrespondenceGraph{}.validate(); });
}

TEST(Initialize, SingleImageUsesControls) {
  const Camera c = camera(5, -3, 30);
  const Homography truth = truth_of(c);
  const Homography inv = truth.inverse();
  CorrespondenceGraph g;
  g.images = {{"only", std::nullopt, std::nullopt, false}};
  std::vector<ControlPoint> cps;
  for (const auto& w : {PlanePoint{0, 30}, PlanePoint{30, 40}, PlanePoint{-10, 60}, PlanePoint{20, 80},
                        PlanePoint{8, 45}}) {
    const PixelPoint px{apply(inv, Eigen::Vector2d(w.x, w.y)).x(),
                        apply(inv, Eigen::Vector2d(w.x, w.y)).y()};
    g.controls.push_back({"only", px, w});
    cps.push_back({px, w});
  }
  const HomographyMap init = initialize(g);
  const Homography direct = metric_rectify(cps).homography;
  EXPECT_LT((init.at("only").matrix() - direct.matrix()).norm(), 1e-12);
  EXPECT_LT(map_rms(init.at("only"), truth), 1e-6);
}

TEST(Initialize, ChainedMatchesComposition) {
  TwoViews tv = two_views(20);
  tv.graph.images[1].initial.reset();
  const HomographyMap init = initialize(tv.graph);
  EXPECT_EQ(init.at("a").matrix(), tv.truth_a.matrix());
  EXPECT_LT(map_rms(init.at("b"), tv.truth_b), 1e-9);
}

TEST(Initialize, CoarsePoseOnGrid) {
  // 5 x 8 grid, every camera's pitch, height and yaw off by 2% (yaw by
  // 0.02 rad): each initial homography within 10% of the ground truth in
  // reprojection RMS, relative to the footprint size.
  SceneSpec spec;
  spec.cameras = camera_grid(5, 8, spec.extent_x, spec.extent_y, 50.0, deg(55.0),
                             intrinsics(900.0, 600.0, 450.0), kWidth, kHeight);
  SyntheticMosaic m = generate_ba_graph(spec, NoiseModel{});
  for (auto& im : m.graph.images) {
    im.camera->pose.pitch *= 1.02;
    im.camera->pose.height *= 1.02;
    im.camera->pose.yaw += 0.02;
  }
  const HomographyMap init = initialize(m.graph);
  double worst = 0.0;
  for (const auto& [id, h] : m.truth) {
    // Reference scale: RMS distance of the sampled ground points from the
    // image center's ground point.
    const double err = map_rms(init.at(id), h);
    double spread = 0.0;
    const Eigen::Vector2d centre = apply(h, Eigen::Vector2d(600, 450));
    int n = 0;
    for (int u = 0; u <= kWidth; u += 200) {
      for (int v = 0; v <= kHeight; v += 150) {
        spread += (apply(h, Eigen::Vector2d(u, v)) - centre).squaredNorm();
        ++n;
      }
    }
    worst = std::max(worst, err / std::sqrt(spread / n));
  }
  std::printf("worst initial reprojection RMS relative to footprint: %.4f\n", worst);
  EXPECT_LT(worst, 0.10);
}

TEST(Solve, ExactInitializationIsAFixedPoint) {
  TwoViews tv = two_views(20);
  tv.graph.images[1].initial = tv.truth_b;
  const BaSolution s = solve(tv.graph);
  EXPECT_LE(s.iterations, 2);
  EXPECT_LT(s.final_cost, 1e-18);
  EXPECT_TRUE(s.converged);
}

TEST(Solve, TwoImagesRecoverSecondHomography) {
  const TwoViews tv = two_views(20);
  const BaSolution s = solve(tv.graph);
  EXPECT_TRUE(s.converged) << s.termination;
  ASSERT_EQ(s.per_edge_rms.size(), 1u);
  EXPECT_LT(s.per_edge_rms[0].rms, 1e-8);
  EXPECT_LT(map_rms(s.homographies.at("b"), tv.truth_b), 1e-6);
  EXPECT_LE(s.final_cost, s.initial_cost);
}

TEST(Solve, AnchorIsBitIdentical) {
  const TwoViews tv = two_views(20);
  const BaSolution s = solve(tv.graph);
  const Eigen::Matrix3d& before = tv.graph.images[0].initial->matrix();
  const Eigen::Matrix3d& after = s.homographies.at("a").matrix();
  for (int k = 0; k < 9; ++k) EXPECT_EQ(before(k), after(k));
}

SyntheticMosaic noisy_grid(int rows, int cols, std::uint64_t seed, double outliers = 0.0) {
  return generate_ba_graph(scenarios::ba_scene(rows, cols), scenarios::ba_noise(seed, outliers));
}

TEST(Solve, CostTraceIsMonotone) {
  const SyntheticMosaic m = noisy_grid(2, 3, 21);
  const BaSolution s = solve(m.graph);
  ASSERT_FALSE(s.cost_trace.empty());
  EXPECT_EQ(s.cost_trace.front(), s.initial_cost);
  EXPECT_EQ(s.cost_trace.back(), s.final_cost);
  for (std::size_t i = 1; i < s.cost_trace.size(); ++i) {
    EXPECT_LE(s.cost_trace[i], s.cost_trace[i - 1]);
  }
  for (const auto& e : s.per_edge_rms) EXPECT_GE(e.rms, 0.0);
}

TEST(Solve, Deterministic) {
  const SyntheticMosaic m1 = noisy_grid(2, 3, 33);
  const SyntheticMosaic m2 = noisy_grid(2, 3, 33);
  const BaSolution a = solve(m1.graph);
  const BaSolution b = solve(m2.graph);
  EXPECT_EQ(a.cost_trace, b.cost_trace);
  for (const auto& [id, h] : a.homographies) {
    EXPECT_EQ(h.matrix(), b.homographies.at(id).matrix()) << id;
  }
}

TEST(Solve, RigidGaugeInvariance) {
  const SyntheticMosaic m = noisy_grid(2, 3, 41);
  const HomographyMap init = initialize(m.graph);
  const BaSolution base = solve(m.graph, {}, init);

  const double c = std::cos(0.7);
  const double s = std::sin(0.7);
  Eigen::Matrix3d rigid;
  rigid << c, -s, 130.0, s, c, -75.0, 0, 0, 1;
  const Homography g(rigid);
  CorrespondenceGraph moved = m.graph;
  HomographyMap moved_init;
  for (auto& im : moved.images) im.camera.reset();
  for (const auto& [id, h] : init) moved_init.emplace(id, g.compose(h));
  for (auto& ctrl : moved.controls) {
    const Eigen::Vector2d w = apply(g, Eigen::Vector2d(ctrl.world.x, ctrl.world.y));
    ctrl.world = {w.x(), w.y()};
  }
  const BaSolution other = solve(moved, {}, moved_init);
  EXPECT_NEAR(other.initial_cost, base.initial_cost, 1e-9 * base.initial_cost);
  EXPECT_NEAR(other.final_cost, base.final_cost, 1e-9 * base.final_cost);
}

TEST(Solve, ControlsForceMetricGauge) {
  const SyntheticMosaic m = noisy_grid(2, 3, 55);
  const BaSolution s = solve(m.graph);
  std::vector<HoldoutPoint> on_controls;
  for (const auto& c : m.graph.controls) on_controls.push_back({c.image_id, c.pixel, c.world});
  const HoldoutReport r = evaluate(s, on_controls);
  ASSERT_TRUE(r.rms);
  EXPECT_LT(*r.rms, 0.3);
}

TEST(Evaluate, ControlsOnNoiseFreeSolve) {
  const TwoViews tv = two_views(20);
  const BaSolution s = solve(tv.graph);
  std::vector<HoldoutPoint> pts;
  for (const auto& [u, v] : {std::pair{100.0, 200.0}, std::pair{900.0, 800.0}}) {
    const Eigen::Vector2d w = apply(tv.truth_b, Eigen::Vector2d(u, v));
    pts.push_back({"b", {u, v}, {w.x(), w.y()}});
  }
  const HoldoutReport r = evaluate(s, pts);
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_LT(*r.max, 1e-8);
}

TEST(Evaluate, EmptyAndUnknown) {
  const TwoViews tv = two_views(20);
  const BaSolution s = solve(tv.graph);
  const HoldoutReport empty = evaluate(s, {});
  EXPECT_TRUE(empty.errors.empty());
  EXPECT_FALSE(empty.rms.has_value());
  EXPECT_FALSE(empty.max.has_value());
  expect_error(ErrorCode::kUnknownImage, [&] { evaluate(s, {{"zzz", {0, 0}, {0, 0}}}); });
}

TEST(Solve, FortyImageGrid) {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticMosaic m = noisy_grid(5, 8, 2024);
  ASSERT_EQ(m.graph.images.size(), 40u);
  EXPECT_GE(m.graph.edges.size(), 39u);
  const BaSolution s = solve(m.graph);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_TRUE(s.converged) << s.termination;
  std::vector<HoldoutPoint> training;
  for (const auto& c : m.graph.controls) training.push_back({c.image_id, c.pixel, c.world});
  const HoldoutReport train = evaluate(s, training);
  const HoldoutReport hold = evaluate(s, m.holdout);
  ASSERT_TRUE(hold.rms && train.rms);
  std::printf("40 images: %zu edges, %d iterations, max edge RMS %.4f px, control RMS %.4f m, "
              "holdout RMS %.4f m, %.1f s\n",
              m.graph.edges.size(), s.iterations, s.max_edge_rms(), *train.rms, *hold.rms,
              seconds);
  EXPECT_LT(s.max_edge_rms(), 0.5);
  EXPECT_LT(*train.rms, 0.3);
  EXPECT_LT(*hold.rms, 0.3);
  EXPECT_LT(*hold.rms, 3.0 * std::max(*train.rms, 0.01));
}

TEST(Solve, HuberBeatsLeastSquaresWithOutliers) {
  int wins = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    const SyntheticMosaic m = noisy_grid(5, 8, 500 + seed, 0.2);
    LmConfig plain;
    LmConfig huber;
    huber.loss = LossKind::kHuber;
    // Plane-frame residuals are in meters; inlier noise is a few centimeters.
    huber.huber_delta = 0.1;
    const HomographyMap init = initialize(m.graph);
    const double e_plain = *evaluate(solve(m.graph, plain, init), m.holdout).rms;
    const double e_huber = *evaluate(solve(m.graph, huber, init), m.holdout).rms;
    if (e_huber < e_plain) ++wins;
  }
  std::printf("Huber beats least squares in %d of %d seeds\n", wins, seeds);
  EXPECT_GE(wins, 9);
}

TEST(LmConfig, Validation) {
  LmConfig c;
  c.validate();
  c.max_iterations = 0;
  expect_error(ErrorCode::kInvalidArgument, [&] { c.validate(); });
  c = {};
  c.huber_delta = -1;
  expect_error(ErrorCode::kInvalidArgument, [&] { c.validate(); });
}

}  // namespace
}  // namespace planar
