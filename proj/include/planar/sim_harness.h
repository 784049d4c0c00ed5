#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planar/geometry.h"
#include "planar/mosaic_ba.h"
#include "planar/stereo_ranging.h"

namespace planar {

// Error sources of a deployed camera. Composition order is fixed: the pose is
// perturbed first (the camera's true pose differs from its nominal one), then
// every pixel gets Gaussian noise, then a fraction of observations is
// replaced by a uniform error of up to outlier_scale pixels per axis.
struct NoiseModel {
  double pixel_sigma = 0.0;   // pixels
  double pitch_sigma = 0.0;   // radians
  double yaw_sigma = 0.0;     // radians
  double height_sigma = 0.0;  // meters
  double outlier_fraction = 0.0;
  double outlier_scale = 0.0;  // pixels
  std::uint64_t seed = 0;

  void validate() const;
};

struct SceneCamera {
  Camera camera;
  int image_width = 0;
  int image_height = 0;
};

enum class PointLayout { kGrid, kRandom, kExplicit };

// Ground truth over the plane [0, extent_x] x [0, extent_y].
struct SceneSpec {
  double extent_x = 220.0;
  double extent_y = 300.0;
  PointLayout layout = PointLayout::kGrid;
  int grid_nx = 12;
  int grid_ny = 16;
  int random_count = 100;
  std::vector<PlanePoint> explicit_points;
  std::vector<SceneCamera> cameras;
  int control_point_count = 8;

  void validate() const;
  // Truth points for the layout; the random layout draws from `seed`.
  std::vector<PlanePoint> points(std::uint64_t seed) const;
};

// rows x cols cameras looking along +y (yaw 0) whose principal-ray ground
// intersections sit at the cell centers of the plane.
std::vector<SceneCamera> camera_grid(int rows, int cols, double extent_x, double extent_y,
                                     double height, double pitch,
                                     const CameraIntrinsics& intrinsics, int image_width,
                                     int image_height);

struct Observation {
  PlanePoint truth;
  PixelPoint clean;     // noise-free projection through the true pose
  PixelPoint observed;  // after pixel noise and outlier replacement
  bool outlier = false;
};

struct CameraObservations {
  Camera nominal;  // pose the measuring side believes
  Camera actual;   // perturbed pose that produced the pixels
  std::vector<Observation> observations;
  int not_visible = 0;
};

struct ObservationSet {
  std::vector<CameraObservations> cameras;
  int not_visible = 0;
};

// Projects every truth point through each camera's perturbed pose with the
// monocular forward model. Points that do not land inside the image are
// omitted and counted. Deterministic in noise.seed.
ObservationSet generate_observations(const SceneSpec& spec, const NoiseModel& noise);

struct SyntheticMosaic {
  CorrespondenceGraph graph;
  HomographyMap truth;  // image -> world meters
  std::vector<HoldoutPoint> holdout;
};

struct MosaicSimOptions {
  int matches_per_edge = 30;
  int min_matches = 8;
  int holdout_count = 20;
};

// Graph whose image poses carry the pose noise (the coarse initialization)
// while matches, controls and holdout points are noisy projections through
// the true cameras. Throws NoOverlap when the graph would be disconnected.
SyntheticMosaic generate_ba_graph(const SceneSpec& spec, const NoiseModel& noise,
                                  const MosaicSimOptions& options = {});

struct PointError {
  int trial = 0;
  int camera = 0;
  PlanePoint truth;
  PlanePoint estimate;
  double abs_error = 0.0;  // meters
  double rel_error = 0.0;  // abs_error / true horizontal range
};

struct ErrorSummary {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

struct ErrorReport {
  std::vector<PointError> points;
  ErrorSummary abs;
  ErrorSummary rel;
  int trials = 0;
  int failures = 0;     // observations the estimator rejected
  int not_visible = 0;  // truth points that produced no observation

  void summarize();
};

ErrorSummary summarize(std::vector<double> values);

struct EvalOptions {
  int workers = 0;  // 0: hardware concurrency
};

// Monte-Carlo over trials; trial t uses a sub-seed derived from noise.seed
// and t, so results do not depend on the worker count.
ErrorReport evaluate_mono(const SceneSpec& spec, const NoiseModel& noise, int trials,
                          const EvalOptions& options = {});

enum class StereoForwardModel {
  kBearing,  // pixel column from the true horizontal bearing
  kPinhole,  // full monocular projection (pitch couples into the column)
};

struct StereoEvalOptions {
  StereoForwardModel forward = StereoForwardModel::kBearing;
  int workers = 0;
};

// Uses the first two scene cameras as the rig (baseline and azimuth from
// their nominal positions). Pixel noise is applied to u only.
ErrorReport evaluate_stereo(const SceneSpec& spec, const NoiseModel& noise, int trials,
                            const StereoEvalOptions& options = {});

StereoRig rig_from_cameras(const Camera& a, const Camera& b);

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

}  // namespace planar
