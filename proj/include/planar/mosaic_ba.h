#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "planar/geometry.h"
#include "planar/homography.h"
#include "planar/lm.h"

namespace planar {

// Images over a common ground plane, their pairwise pixel matches and
// surveyed control points. Homographies map image pixels to the plane frame
// (meters when controls are metric).
struct GraphImage {
  std::string id;
  std::optional<Camera> camera;
  std::optional<Homography> initial;
  bool anchor = false;
};

struct PixelMatch {
  PixelPoint a;
  PixelPoint b;
};

struct MatchEdge {
  std::string image_a;
  std::string image_b;
  std::vector<PixelMatch> matches;
};

struct GraphControl {
  std::string image_id;
  PixelPoint pixel;
  PlanePoint world;
};

struct CorrespondenceGraph {
  std::vector<GraphImage> images;
  std::vector<MatchEdge> edges;
  std::vector<GraphControl> controls;

  // Index into images; throws UnknownImage.
  std::size_t index_of(const std::string& id) const;

  // Endpoints declared, graph connected (SolveDisconnected) and gauge fixed
  // (NoGauge). The gauge is fixed by a single anchor image, by an image with
  // at least four controls, or by at least four controls across the graph.
  void validate() const;
};

using HomographyMap = std::map<std::string, Homography>;

struct EdgeRms {
  std::string image_a;
  std::string image_b;
  double rms = 0.0;  // pixels
};

struct BaSolution {
  HomographyMap homographies;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;
  // Reprojection RMS per edge, pixels: each match is mapped to the plane by
  // both images, averaged there and reprojected into both.
  std::vector<EdgeRms> per_edge_rms;
  std::string termination;

  double max_edge_rms() const;
};

// Per-image starting homographies: the given initial one, else the coarse
// bird's-eye view from the camera pose, else a rectification from >= 4 own
// controls, else chained pairwise DLT along the match graph.
HomographyMap initialize(const CorrespondenceGraph& graph);

// Levenberg-Marquardt over all non-anchored homographies. The robust loss,
// when configured, applies to edge residuals only. Non-convergence is
// reported through BaSolution::converged; a non-finite cost throws
// NumericalFailure.
BaSolution solve(const CorrespondenceGraph& graph, const LmConfig& config = {});
BaSolution solve(const CorrespondenceGraph& graph, const LmConfig& config,
                 const HomographyMap& initial);

struct HoldoutPoint {
  std::string image_id;
  PixelPoint pixel;
  PlanePoint world;
};

struct HoldoutReport {
  std::vector<double> errors;  // meters, one per holdout point
  std::optional<double> rms;   // absent for an empty holdout
  std::optional<double> max;
};

// Throws UnknownImage.
HoldoutReport evaluate(const BaSolution& solution, const std::vector<HoldoutPoint>& holdout);

// Local chart of a homography: H(delta) = H T^-1 (I + D(delta)) T, where T
// normalizes the image's pixel coordinates and D holds delta in all entries
// except (2,2).
struct LocalChart {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d t_inv = Eigen::Matrix3d::Identity();

  static LocalChart for_points(const std::vector<Eigen::Vector2d>& pixels);
  Eigen::Matrix3d retract(const Eigen::Matrix3d& h, const Eigen::Matrix<double, 8, 1>& delta) const;
  // pi(H p) and its Jacobian with respect to delta at delta = 0.
  Eigen::Vector2d project(const Eigen::Matrix3d& h, const Eigen::Vector2d& p,
                          Eigen::Matrix<double, 2, 8>* jacobian) const;
};

}  // namespace planar
