#include "planar/mosaic_ba.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <Eigen/Dense>

#include "planar/error.h"

namespace planar {

namespace {

constexpr int kBlock = 8;
using Block = Eigen::Matrix<double, kBlock, kBlock>;
using Jac = Eigen::Matrix<double, 2, kBlock>;

Eigen::Vector2d vec(const PixelPoint& p) { return {p.u, p.v}; }
Eigen::Vector2d vec(const PlanePoint& p) { return {p.x, p.y}; }

// Union-find over image indices.
struct Components {
  std::vector<std::size_t> parent;
  explicit Components(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::size_t CorrespondenceGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].id == id) return i;
  }
  throw Error(ErrorCode::kUnknownImage, "image '" + id + "' is not declared");
}

void CorrespondenceGraph::validate() const {
  if (images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "graph has no images");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      if (images[i].id == images[j].id) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate image id '" + images[i].id + "'");
      }
    }
  }
  Components comp(images.size());
  for (const auto& e : edges) {
    const std::size_t a = index_of(e.image_a);
    const std::size_t b = index_of(e.image_b);
    if (a == b) {
      throw Error(ErrorCode::kInvalidArgument, "edge connects image '" + e.image_a + "' to itself");
    }
    if (!e.matches.empty()) comp.unite(a, b);
  }
  std::vector<int> controls_per_image(images.size(), 0);
  for (const auto& c : controls) ++controls_per_image[index_of(c.image_id)];

  for (std::size_t i = 1; i < images.size(); ++i) {
    if (comp.find(i) != comp.find(0)) {
      throw Error(ErrorCode::kSolveDisconnected,
                  "image '" + images[i].id + "' is not connected to '" + images[0].id + "'");
    }
  }
  const auto anchors = std::count_if(images.begin(), images.end(),
                                     [](const GraphImage& im) { return im.anchor; });
  if (anchors > 1) {
    throw Error(ErrorCode::kNoGauge, "more than one anchor image declared");
  }
  const bool dense_controls =
      std::any_of(controls_per_image.begin(), controls_per_image.end(),
                  [](int n) { return n >= 4; });
  if (anchors == 0 && !dense_controls && controls.size() < 4) {
    throw Error(ErrorCode::kNoGauge,
                "need an anchor image or at least four control points");
  }
}

double BaSolution::max_edge_rms() const {
  double m = 0.0;
  for (const auto& e : per_edge_rms) m = std::max(m, e.rms);
  return m;
}

LocalChart LocalChart::for_points(const std::vector<Eigen::Vector2d>& pixels) {
  LocalChart chart;
  if (pixels.empty()) return chart;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pixels) centroid += p;
  centroid /= static_cast<double>(pixels.size());
  double mean_dist = 0.0;
  for (const auto& p : pixels) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pixels.size());
  if (!(mean_dist > 0.0)) mean_dist = 1.0;
  const double s = std::sqrt(2.0) / mean_dist;
  chart.t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  chart.t_inv = chart.t.inverse();
  return chart;
}

Eigen::Matrix3d LocalChart::retract(const Eigen::Matrix3d& h,
                                    const Eigen::Matrix<double, 8, 1>& delta) const {
  Eigen::Matrix3d update = Eigen::Matrix3d::Identity();
  for (int k = 0; k < kBlock; ++k) update(k / 3, k % 3) += delta[k];
  return Homography::normalize(h * t_inv * update * t);
}

Eigen::Vector2d LocalChart::project(const Eigen::Matrix3d& h, const Eigen::Vector2d& p,
                                    Eigen::Matrix<double, 2, 8>* jacobian) const {
  const Eigen::Vector3d pn = t * p.homogeneous();
  const Eigen::Matrix3d m = h * t_inv;
  const Eigen::Vector3d x = m * pn;
  const double w = x.z();
  if (jacobian) {
    Eigen::Matrix<double, 2, 3> dpi;
    dpi << 1.0 / w, 0.0, -x.x() / (w * w), 0.0, 1.0 / w, -x.y() / (w * w);
    for (int k = 0; k < kBlock; ++k) {
      // d x / d D(j, c) = m.col(j) * pn(c)
      jacobian->col(k) = dpi * m.col(k / 3) * pn[k % 3];
    }
  }
  return x.hnormalized();
}

HomographyMap initialize(const CorrespondenceGraph& graph) {
  graph.validate();
  const std::size_t n = graph.images.size();
  std::vector<std::optional<Eigen::Matrix3d>> h(n);

  std::vector<std::vector<ControlPoint>> own_controls(n);
  for (const auto& c : graph.controls) {
    own_controls[graph.index_of(c.image_id)].push_back({c.pixel, c.world});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const GraphImage& im = graph.images[i];
    if (im.initial) {
      h[i] = im.initial->matrix();
    } else if (im.camera) {
      h[i] = bev_from_camera(im.camera->intrinsics, im.camera->pose, 1.0).matrix();
    } else if (own_controls[i].size() >= 4) {
      h[i] = metric_rectify(own_controls[i]).homography.matrix();
    }
  }
  const auto anchor = std::find_if(graph.images.begin(), graph.images.end(),
                                   [](const GraphImage& im) { return im.anchor; });
  if (anchor != graph.images.end() && !h[static_cast<std::size_t>(anchor - graph.images.begin())]) {
    throw Error(ErrorCode::kNoGauge, "anchor image '" + anchor->id + "' has no homography");
  }

  // Chain along the match graph, breadth first from every seeded image.
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (h[i]) queue.push_back(i);
  }
  while (!queue.empty()) {
    const std::size_t from = queue.front();
    queue.pop_front();
    for (const auto& e : graph.edges) {
      const std::size_t a = graph.index_of(e.image_a);
      const std::size_t b = graph.index_of(e.image_b);
      if ((a != from && b != from) || e.matches.size() < 4) continue;
      const std::size_t to = a == from ? b : a;
      if (h[to]) continue;
      // Correspondences from the unseeded image into the seeded one.
      std::vector<Correspondence> corrs;
      for (const auto& m : e.matches) {
        corrs.push_back(a == from ? Correspondence{vec(m.b), vec(m.a)}
                                  : Correspondence{vec(m.a), vec(m.b)});
      }
      const Estimate rel = estimate_dlt(corrs);
      h[to] = *h[from] * rel.homography.matrix();
      queue.push_back(to);
    }
  }

  HomographyMap out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!h[i]) {
      throw Error(ErrorCode::kNoGauge,
                  "cannot initialize image '" + graph.images[i].id + "'");
    }
    out.emplace(graph.images[i].id, Homography(*h[i]));
  }
  return out;
}

namespace {

struct EdgeTerm {
  int a;  // image index
  int b;
  Eigen::Vector2d pa;
  Eigen::Vector2d pb;
};

struct ControlTerm {
  int image;
  Eigen::Vector2d pixel;
  Eigen::Vector2d world;
};

class MosaicProblem : public LeastSquaresProblem {
 public:
  MosaicProblem(const CorrespondenceGraph& graph, const LmConfig& config,
                const HomographyMap& initial)
      : config_(config) {
    const std::size_t n = graph.images.size();
    h_.resize(n);
    free_index_.assign(n, -1);
    std::vector<std::vector<Eigen::Vector2d>> pixels(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = initial.find(graph.images[i].id);
      if (it == initial.end()) {
        throw Error(ErrorCode::kUnknownImage,
                    "no initial homography for '" + graph.images[i].id + "'");
      }
      h_[i] = it->second.matrix();
      if (!graph.images[i].anchor) free_index_[i] = num_free_++;
    }
    for (const auto& e : graph.edges) {
      const int a = static_cast<int>(graph.index_of(e.image_a));
      const int b = static_cast<int>(graph.index_of(e.image_b));
      for (const auto& m : e.matches) {
        edges_.push_back({a, b, vec(m.a), vec(m.b)});
        pixels[static_cast<std::size_t>(a)].push_back(vec(m.a));
        pixels[static_cast<std::size_t>(b)].push_back(vec(m.b));
      }
    }
    for (const auto& c : graph.controls) {
      const int i = static_cast<int>(graph.index_of(c.image_id));
      controls_.push_back({i, vec(c.pixel), vec(c.world)});
      pixels[static_cast<std::size_t>(i)].push_back(vec(c.pixel));
    }
    for (std::size_t i = 0; i < n; ++i) charts_.push_back(LocalChart::for_points(pixels[i]));
    previous_ = h_;
  }

  int num_parameters() const override { return kBlock * num_free_; }

  double parameter_norm() const override { return std::sqrt(static_cast<double>(num_free_)); }

  double cost() const override {
    double total = 0.0;
    for (const auto& e : edges_) {
      const Eigen::Vector2d r = map(e.a, e.pa) - map(e.b, e.pb);
      total += robust(config_.edge_weight * r.squaredNorm()).cost;
    }
    for (const auto& c : controls_) {
      const Eigen::Vector2d r = map(c.image, c.pixel) - c.world;
      total += config_.control_weight * r.squaredNorm();
    }
    return total;
  }

  NormalEquations linearize() const override {
    // Blocks keyed by (row image, col image) in free-parameter order; a map
    // keeps the accumulation order fixed.
    std::map<std::pair<int, int>, Block> blocks;
    NormalEquations eq;
    eq.dim = num_parameters();
    eq.gradient = Eigen::VectorXd::Zero(eq.dim);

    auto accumulate = [&](int i, const Jac& ji, int j, const Jac* jj,
                          const Eigen::Vector2d& r, double weight) {
      const int fi = free_index_[static_cast<std::size_t>(i)];
      const int fj = jj ? free_index_[static_cast<std::size_t>(j)] : -1;
      if (fi >= 0) {
        add(blocks, fi, fi, weight * ji.transpose() * ji);
        eq.gradient.segment<kBlock>(kBlock * fi) += weight * ji.transpose() * r;
      }
      if (fj >= 0) {
        add(blocks, fj, fj, weight * jj->transpose() * *jj);
        eq.gradient.segment<kBlock>(kBlock * fj) += weight * jj->transpose() * r;
      }
      if (fi >= 0 && fj >= 0) {
        const Block cross = weight * ji.transpose() * *jj;
        add(blocks, fi, fj, cross);
        add(blocks, fj, fi, cross.transpose());
      }
    };

    double total = 0.0;
    for (const auto& e : edges_) {
      Jac ja;
      Jac jb;
      const Eigen::Vector2d r = map(e.a, e.pa, &ja) - map(e.b, e.pb, &jb);
      const RobustTerm t = robust(config_.edge_weight * r.squaredNorm());
      total += t.cost;
      jb = -jb;
      accumulate(e.a, ja, e.b, &jb, r, config_.edge_weight * t.weight);
    }
    for (const auto& c : controls_) {
      Jac j;
      const Eigen::Vector2d r = map(c.image, c.pixel, &j) - c.world;
      total += config_.control_weight * r.squaredNorm();
      accumulate(c.image, j, -1, nullptr, r, config_.control_weight);
    }
    eq.cost = total;
    eq.hessian.reserve(blocks.size() * kBlock * kBlock);
    for (const auto& [key, block] : blocks) {
      for (int r = 0; r < kBlock; ++r) {
        for (int c = 0; c < kBlock; ++c) {
          eq.hessian.emplace_back(kBlock * key.first + r, kBlock * key.second + c, block(r, c));
        }
      }
    }
    return eq;
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    previous_ = h_;
    for (std::size_t i = 0; i < h_.size(); ++i) {
      const int f = free_index_[i];
      if (f < 0) continue;
      h_[i] = charts_[i].retract(h_[i], delta.segment<kBlock>(kBlock * f));
    }
  }

  void undo_step() override { h_ = previous_; }

  const std::vector<Eigen::Matrix3d>& homographies() const { return h_; }

 private:
  static void add(std::map<std::pair<int, int>, Block>& blocks, int i, int j, const Block& b) {
    auto [it, inserted] = blocks.try_emplace({i, j}, b);
    if (!inserted) it->second += b;
  }

  Eigen::Vector2d map(int image, const Eigen::Vector2d& p, Jac* jacobian = nullptr) const {
    const auto i = static_cast<std::size_t>(image);
    return charts_[i].project(h_[i], p, jacobian);
  }

  RobustTerm robust(double squared_norm) const {
    return robustify(squared_norm, config_.loss, config_.huber_delta);
  }

  LmConfig config_;
  std::vector<Eigen::Matrix3d> h_;
  std::vector<Eigen::Matrix3d> previous_;
  std::vector<LocalChart> charts_;
  std::vector<int> free_index_;
  int num_free_ = 0;
  std::vector<EdgeTerm> edges_;
  std::vector<ControlTerm> controls_;
};

double edge_reprojection_rms(const Eigen::Matrix3d& ha, const Eigen::Matrix3d& hb,
                             const MatchEdge& edge) {
  if (edge.matches.empty()) return 0.0;
  const Eigen::Matrix3d ia = ha.inverse();
  const Eigen::Matrix3d ib = hb.inverse();
  double sum_sq = 0.0;
  for (const auto& m : edge.matches) {
    const Eigen::Vector2d ga = (ha * vec(m.a).homogeneous()).hnormalized();
    const Eigen::Vector2d gb = (hb * vec(m.b).homogeneous()).hnormalized();
    const Eigen::Vector3d g = (0.5 * (ga + gb)).homogeneous();
    sum_sq += ((ia * g).hnormalized() - vec(m.a)).squaredNorm();
    sum_sq += ((ib * g).hnormalized() - vec(m.b)).squaredNorm();
  }
  return std::sqrt(sum_sq / (2.0 * static_cast<double>(edge.matches.size())));
}

}  // namespace

BaSolution solve(const CorrespondenceGraph& graph, const LmConfig& config) {
  return solve(graph, config, initialize(graph));
}

BaSolution solve(const CorrespondenceGraph& graph, const LmConfig& config,
                 const HomographyMap& initial) {
  graph.validate();
  config.validate();
  MosaicProblem problem(graph, config, initial);
  const LmSummary summary = solve_levenberg_marquardt(problem, config);

  BaSolution sol;
  sol.initial_cost = summary.initial_cost;
  sol.final_cost = summary.final_cost;
  sol.iterations = summary.iterations;
  sol.converged = summary.converged;
  sol.cost_trace = summary.cost_trace;
  sol.termination = summary.termination;
  const auto& hs = problem.homographies();
  for (std::size_t i = 0; i < graph.images.size(); ++i) {
    const GraphImage& im = graph.images[i];
    // The anchor is copied through untouched.
    sol.homographies.emplace(im.id, im.anchor ? initial.at(im.id) : Homography(hs[i]));
  }
  for (const auto& e : graph.edges) {
    sol.per_edge_rms.push_back(
        {e.image_a, e.image_b,
         edge_reprojection_rms(sol.homographies.at(e.image_a).matrix(),
                               sol.homographies.at(e.image_b).matrix(), e)});
  }
  return sol;
}

HoldoutReport evaluate(const BaSolution& solution, const std::vector<HoldoutPoint>& holdout) {
  HoldoutReport report;
  double sum_sq = 0.0;
  double max_err = 0.0;
  for (const auto& p : holdout) {
    const auto it = solution.homographies.find(p.image_id);
    if (it == solution.homographies.end()) {
      throw Error(ErrorCode::kUnknownImage, "image '" + p.image_id + "' is not in the solution");
    }
    const PlanePoint est = apply(it->second, p.pixel);
    const double err = distance(est, p.world);
    report.errors.push_back(err);
    sum_sq += err * err;
    max_err = std::max(max_err, err);
  }
  if (!holdout.empty()) {
    report.rms = std::sqrt(sum_sq / static_cast<double>(holdout.size()));
    report.max = max_err;
  }
  return report;
}

}  // namespace planar
