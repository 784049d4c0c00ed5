#include "planar/sim_harness.h"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <thread>

#include "planar/error.h"
#include "planar/homography.h"
#include "planar/mono_ranging.h"

namespace planar {

namespace {

// Draws are taken unconditionally so that a zero sigma or an invisible point
// never shifts the stream for later draws.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

  double gaussian(double sigma) { return sigma * normal_(rng_); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform_(rng_);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

Camera perturb(const Camera& nominal, const NoiseModel& noise, NoiseSource& src) {
  Camera actual = nominal;
  actual.pose.pitch += src.gaussian(noise.pitch_sigma);
  actual.pose.yaw += src.gaussian(noise.yaw_sigma);
  actual.pose.height += src.gaussian(noise.height_sigma);
  return actual;
}

// Pixel noise followed by optional outlier replacement.
PixelPoint corrupt(const PixelPoint& clean, const NoiseModel& noise, NoiseSource& src,
                   bool* outlier) {
  PixelPoint p{clean.u + src.gaussian(noise.pixel_sigma),
               clean.v + src.gaussian(noise.pixel_sigma)};
  const double draw = src.uniform(0.0, 1.0);
  const double du = src.uniform(-noise.outlier_scale, noise.outlier_scale);
  const double dv = src.uniform(-noise.outlier_scale, noise.outlier_scale);
  *outlier = draw < noise.outlier_fraction;
  if (*outlier) p = {clean.u + du, clean.v + dv};
  return p;
}

bool inside(const SceneCamera& cam, const PixelPoint& p) {
  if (cam.image_width <= 0 || cam.image_height <= 0) return true;
  return p.u >= 0.0 && p.v >= 0.0 && p.u < cam.image_width && p.v < cam.image_height;
}

std::optional<PixelPoint> try_project(const Camera& camera, const PlanePoint& q) {
  try {
    return project_to_pixel(MonoRangingModel{camera.intrinsics, camera.pose, {}}, q);
  } catch (const Error&) {
    return std::nullopt;
  }
}

void parallel_trials(int trials, int workers, const std::function<void(int)>& body) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::clamp(workers, 1, std::max(trials, 1));
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int t = w; t < trials; t += workers) body(t);
    });
  }
}

ErrorReport merge(std::vector<ErrorReport>& per_trial) {
  ErrorReport out;
  out.trials = static_cast<int>(per_trial.size());
  for (auto& r : per_trial) {
    out.points.insert(out.points.end(), r.points.begin(), r.points.end());
    out.failures += r.failures;
    out.not_visible += r.not_visible;
  }
  out.summarize();
  return out;
}

}  // namespace

void NoiseModel::validate() const {
  if (!(pixel_sigma >= 0.0) || !(pitch_sigma >= 0.0) || !(yaw_sigma >= 0.0) ||
      !(height_sigma >= 0.0) || !(outlier_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sigmas must be non-negative");
  }
  if (!(outlier_fraction >= 0.0) || !(outlier_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier_fraction must lie in [0, 1)");
  }
}

void SceneSpec::validate() const {
  if (!(extent_x > 0.0) || !(extent_y > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "plane extent must be positive");
  }
  if (cameras.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "scene needs at least one camera");
  }
  for (const auto& c : cameras) {
    c.camera.intrinsics.validate();
    c.camera.pose.validate();
  }
  if ((layout == PointLayout::kGrid && (grid_nx <= 0 || grid_ny <= 0)) ||
      (layout == PointLayout::kRandom && random_count <= 0) || control_point_count < 0) {
    throw Error(ErrorCode::kInvalidArgument, "point layout counts must be positive");
  }
}

std::vector<PlanePoint> SceneSpec::points(std::uint64_t seed) const {
  std::vector<PlanePoint> pts;
  switch (layout) {
    case PointLayout::kGrid:
      for (int j = 0; j < grid_ny; ++j) {
        for (int i = 0; i < grid_nx; ++i) {
          pts.push_back({(i + 0.5) * extent_x / grid_nx, (j + 0.5) * extent_y / grid_ny});
        }
      }
      break;
    case PointLayout::kRandom: {
      NoiseSource src(seed);
      for (int k = 0; k < random_count; ++k) {
        const double x = src.uniform(0.0, extent_x);
        const double y = src.uniform(0.0, extent_y);
        pts.push_back({x, y});
      }
      break;
    }
    case PointLayout::kExplicit:
      pts = explicit_points;
      break;
  }
  return pts;
}

std::vector<SceneCamera> camera_grid(int rows, int cols, double extent_x, double extent_y,
                                     double height, double pitch,
                                     const CameraIntrinsics& intrinsics, int image_width,
                                     int image_height) {
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "camera grid needs positive rows and cols");
  }
  const double lead = height / std::tan(pitch);
  std::vector<SceneCamera> cams;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      SceneCamera sc;
      sc.camera.intrinsics = intrinsics;
      sc.camera.pose.height = height;
      sc.camera.pose.pitch = pitch;
      sc.camera.pose.yaw = 0.0;
      sc.camera.pose.position = {(c + 0.5) * extent_x / cols,
                                 (r + 0.5) * extent_y / rows - lead};
      sc.image_width = image_width;
      sc.image_height = image_height;
      cams.push_back(sc);
    }
  }
  return cams;
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  // splitmix64 of the combined key
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ObservationSet generate_observations(const SceneSpec& spec, const NoiseModel& noise) {
  spec.validate();
  noise.validate();
  NoiseSource src(noise.seed);
  const std::vector<PlanePoint> truth = spec.points(trial_seed(noise.seed, ~0ULL));
  ObservationSet set;
  for (const auto& sc : spec.cameras) {
    CameraObservations co;
    co.nominal = sc.camera;
    co.actual = perturb(sc.camera, noise, src);
    for (const auto& q : truth) {
      bool outlier = false;
      const auto clean = try_project(co.actual, q);
      const PixelPoint observed = corrupt(clean.value_or(PixelPoint{}), noise, src, &outlier);
      if (!clean || !inside(sc, *clean)) {
        ++co.not_visible;
        continue;
      }
      co.observations.push_back({q, *clean, observed, outlier});
    }
    set.not_visible += co.not_visible;
    set.cameras.push_back(std::move(co));
  }
  return set;
}

SyntheticMosaic generate_ba_graph(const SceneSpec& spec, const NoiseModel& noise,
                                  const MosaicSimOptions& options) {
  spec.validate();
  noise.validate();
  NoiseSource src(noise.seed);
  const std::size_t n = spec.cameras.size();
  SyntheticMosaic sim;

  struct Box {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  };
  std::vector<Box> footprint(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SceneCamera& sc = spec.cameras[i];
    char id[32];
    std::snprintf(id, sizeof(id), "img%02zu", i);
    GraphImage im;
    im.id = id;
    im.camera = perturb(sc.camera, noise, src);
    sim.graph.images.push_back(im);
    const Homography truth = bev_from_camera(sc.camera.intrinsics, sc.camera.pose, 1.0);
    sim.truth.emplace(im.id, truth);
    for (int a = 0; a <= 8; ++a) {
      for (int b = 0; b <= 8; ++b) {
        const Eigen::Vector3d x =
            truth.matrix() * Eigen::Vector3d(sc.image_width * a / 8.0, sc.image_height * b / 8.0, 1.0);
        if (!(x.z() > 0.0)) continue;
        const Eigen::Vector2d g = x.hnormalized();
        footprint[i].x0 = std::min(footprint[i].x0, g.x());
        footprint[i].y0 = std::min(footprint[i].y0, g.y());
        footprint[i].x1 = std::max(footprint[i].x1, g.x());
        footprint[i].y1 = std::max(footprint[i].y1, g.y());
      }
    }
  }
  auto visible = [&](std::size_t i, const PlanePoint& g) -> std::optional<PixelPoint> {
    const auto p = try_project(spec.cameras[i].camera, g);
    if (!p || !inside(spec.cameras[i], *p)) return std::nullopt;
    return p;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x0 = std::max(footprint[i].x0, footprint[j].x0);
      const double y0 = std::max(footprint[i].y0, footprint[j].y0);
      const double x1 = std::min(footprint[i].x1, footprint[j].x1);
      const double y1 = std::min(footprint[i].y1, footprint[j].y1);
      if (!(x0 < x1 && y0 < y1)) continue;
      MatchEdge edge{sim.graph.images[i].id, sim.graph.images[j].id, {}};
      for (int attempt = 0; attempt < 50 * options.matches_per_edge &&
                            static_cast<int>(edge.matches.size()) < options.matches_per_edge;
           ++attempt) {
        const PlanePoint g{src.uniform(x0, x1), src.uniform(y0, y1)};
        const auto pa = visible(i, g);
        const auto pb = visible(j, g);
        bool outlier_a = false;
        bool outlier_b = false;
        const PixelPoint na = corrupt(pa.value_or(PixelPoint{}), noise, src, &outlier_a);
        const PixelPoint nb = corrupt(pb.value_or(PixelPoint{}), noise, src, &outlier_b);
        if (pa && pb) edge.matches.push_back({na, nb});
      }
      if (static_cast<int>(edge.matches.size()) >= options.min_matches) {
        sim.graph.edges.push_back(std::move(edge));
      }
    }
  }

  // Surveyed points: observed (without outliers) in every image that sees them.
  NoiseModel clean_noise = noise;
  clean_noise.outlier_fraction = 0.0;
  auto draw_visible_point = [&]() -> std::optional<PlanePoint> {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const PlanePoint g{src.uniform(0.0, spec.extent_x), src.uniform(0.0, spec.extent_y)};
      for (std::size_t i = 0; i < n; ++i) {
        if (visible(i, g)) return g;
      }
    }
    return std::nullopt;
  };
  for (int k = 0; k < spec.control_point_count; ++k) {
    const auto g = draw_visible_point();
    if (!g) break;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = visible(i, *g);
      if (!p) continue;
      bool outlier = false;
      sim.graph.controls.push_back(
          {sim.graph.images[i].id, corrupt(*p, clean_noise, src, &outlier), *g});
    }
  }
  for (int k = 0; k < options.holdout_count; ++k) {
    const auto g = draw_visible_point();
    if (!g) break;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = visible(i, *g);
      if (!p) continue;
      bool outlier = false;
      sim.holdout.push_back({sim.graph.images[i].id, corrupt(*p, clean_noise, src, &outlier), *g});
      break;
    }
  }

  try {
    sim.graph.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSolveDisconnected) {
      throw Error(ErrorCode::kNoOverlap, "camera footprints do not form a connected graph");
    }
    throw;
  }
  return sim;
}

ErrorSummary summarize(std::vector<double> values) {
  ErrorSummary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  // Linear interpolation between closest ranks.
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  s.median = quantile(0.5);
  s.p95 = quantile(0.95);
  s.max = values.back();
  return s;
}

void ErrorReport::summarize() {
  std::vector<double> a;
  std::vector<double> r;
  a.reserve(points.size());
  r.reserve(points.size());
  for (const auto& p : points) {
    a.push_back(p.abs_error);
    r.push_back(p.rel_error);
  }
  abs = planar::summarize(std::move(a));
  rel = planar::summarize(std::move(r));
}

ErrorReport evaluate_mono(const SceneSpec& spec, const NoiseModel& noise, int trials,
                          const EvalOptions& options) {
  spec.validate();
  noise.validate();
  if (trials <= 0) throw Error(ErrorCode::kInvalidArgument, "trials must be positive");
  std::vector<ErrorReport> per_trial(static_cast<std::size_t>(trials));
  parallel_trials(trials, options.workers, [&](int t) {
    NoiseModel trial_noise = noise;
    trial_noise.seed = trial_seed(noise.seed, static_cast<std::uint64_t>(t));
    const ObservationSet obs = generate_observations(spec, trial_noise);
    ErrorReport& rep = per_trial[static_cast<std::size_t>(t)];
    rep.not_visible = obs.not_visible;
    for (std::size_t c = 0; c < obs.cameras.size(); ++c) {
      const CameraObservations& co = obs.cameras[c];
      const MonoRangingModel model{co.nominal.intrinsics, co.nominal.pose, {}};
      for (const auto& o : co.observations) {
        PlanePoint est;
        try {
          est = locate(model, o.observed);
        } catch (const Error&) {
          ++rep.failures;
          continue;
        }
        PointError pe;
        pe.trial = t;
        pe.camera = static_cast<int>(c);
        pe.truth = o.truth;
        pe.estimate = est;
        pe.abs_error = distance(est, o.truth);
        const double range = std::hypot(o.truth.x - co.nominal.pose.position.x(),
                                        o.truth.y - co.nominal.pose.position.y());
        pe.rel_error = pe.abs_error / range;
        rep.points.push_back(pe);
      }
    }
  });
  return merge(per_trial);
}

StereoRig rig_from_cameras(const Camera& a, const Camera& b) {
  StereoRig rig;
  rig.cam_a = a;
  rig.cam_b = b;
  const Eigen::Vector2d d = b.pose.position - a.pose.position;
  rig.baseline = d.norm();
  rig.baseline_azimuth = std::atan2(d.x(), d.y());
  rig.validate();
  return rig;
}

ErrorReport evaluate_stereo(const SceneSpec& spec, const NoiseModel& noise, int trials,
                            const StereoEvalOptions& options) {
  spec.validate();
  noise.validate();
  if (spec.cameras.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "stereo evaluation needs two cameras");
  }
  if (trials <= 0) throw Error(ErrorCode::kInvalidArgument, "trials must be positive");
  const StereoRig rig = rig_from_cameras(spec.cameras[0].camera, spec.cameras[1].camera);
  const std::vector<PlanePoint> truth = spec.points(trial_seed(noise.seed, ~0ULL));

  std::vector<ErrorReport> per_trial(static_cast<std::size_t>(trials));
  parallel_trials(trials, options.workers, [&](int t) {
    NoiseSource src(trial_seed(noise.seed, static_cast<std::uint64_t>(t)));
    const Camera actual_a = perturb(rig.cam_a, noise, src);
    const Camera actual_b = perturb(rig.cam_b, noise, src);
    ErrorReport& rep = per_trial[static_cast<std::size_t>(t)];
    auto forward = [&](const Camera& cam, const PlanePoint& q) -> std::optional<PixelPoint> {
      if (options.forward == StereoForwardModel::kPinhole) return try_project(cam, q);
      try {
        return project_bearing(cam, q);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    for (const auto& q : truth) {
      bool outlier = false;
      const auto ca = forward(actual_a, q);
      const auto cb = forward(actual_b, q);
      const PixelPoint na = corrupt(ca.value_or(PixelPoint{}), noise, src, &outlier);
      const PixelPoint nb = corrupt(cb.value_or(PixelPoint{}), noise, src, &outlier);
      if (!ca || !cb || !inside(spec.cameras[0], {na.u, ca->v}) ||
          !inside(spec.cameras[1], {nb.u, cb->v})) {
        ++rep.not_visible;
        continue;
      }
      TriangleSolution sol;
      try {
        sol = range_target(rig, {na.u, ca->v}, {nb.u, cb->v});
      } catch (const Error&) {
        ++rep.failures;
        continue;
      }
      PointError pe;
      pe.trial = t;
      pe.truth = q;
      pe.estimate = sol.target;
      pe.abs_error = distance(sol.target, q);
      pe.rel_error =
          pe.abs_error / std::hypot(q.x - rig.position_a().x(), q.y - rig.position_a().y());
      rep.points.push_back(pe);
    }
  });
  return merge(per_trial);
}

}  // namespace planar
