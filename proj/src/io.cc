#include "planar/io.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "planar/error.h"

namespace planar::io {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, what + " must be a JSON object");
}

void check_fields(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& what) {
  require_object(j, what);
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw Error(ErrorCode::kUnknownField, what + ": unknown field '" + key + "'");
  }
}

double number(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kParseError, what + ": missing field '" + key + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw Error(ErrorCode::kParseError, what + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& what) {
  return j.contains(key) ? number(j, key, what) : fallback;
}

int integer(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw Error(ErrorCode::kParseError, what + ": field '" + key + "' must be an integer");
  }
  return j.at(key).get<int>();
}

std::vector<double> numbers(const json& j, std::size_t count, const std::string& what) {
  if (!j.is_array() || (count != 0 && j.size() != count)) {
    throw Error(ErrorCode::kParseError,
                what + ": expected an array of " + std::to_string(count) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::kParseError, what + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorCode::kParseError, where + ": '" + s + "' is not a number");
  }
  return v;
}

// Rows of a CSV with the given header; blank lines are skipped.
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::vector<std::string>& header) {
  std::stringstream in(read_text(path));
  std::string line;
  bool seen_header = false;
  std::vector<std::vector<std::string>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv(trim(line));
    if (!seen_header) {
      if (cells != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw Error(ErrorCode::kParseError, path + ": expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns");
    }
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw Error(ErrorCode::kParseError, path + ": empty file");
  return rows;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

json matrix_row_major(const Eigen::Matrix3d& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

Eigen::Matrix3d matrix_from(const json& j, const std::string& what) {
  const auto v = numbers(j, 9, what);
  Eigen::Matrix3d m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = v[static_cast<std::size_t>(k)];
  return m;
}

template <typename F>
auto guard(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, what + ": " + e.what());
  }
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

std::string parent_dir(const std::string& path) {
  return std::filesystem::path(path).parent_path().string();
}

Camera camera_from_json(const json& j) {
  const std::string what = "camera";
  check_fields(j,
               {"fx", "fy", "u0", "v0", "pixel_aspect", "height_m", "pitch_deg", "yaw_deg",
                "position_m"},
               what);
  Camera c;
  c.intrinsics.fx = number(j, "fx", what);
  c.intrinsics.fy = number(j, "fy", what);
  c.intrinsics.u0 = number(j, "u0", what);
  c.intrinsics.v0 = number(j, "v0", what);
  c.intrinsics.pixel_aspect = number_or(j, "pixel_aspect", 1.0, what);
  c.pose.height = number(j, "height_m", what);
  c.pose.pitch = deg(number(j, "pitch_deg", what));
  c.pose.yaw = deg(number_or(j, "yaw_deg", 0.0, what));
  if (j.contains("position_m")) {
    const auto p = numbers(j.at("position_m"), 2, what + " position_m");
    c.pose.position = {p[0], p[1]};
  }
  c.intrinsics.validate();
  c.pose.validate();
  return c;
}

json camera_to_json(const Camera& c) {
  return json{{"fx", c.intrinsics.fx},
              {"fy", c.intrinsics.fy},
              {"u0", c.intrinsics.u0},
              {"v0", c.intrinsics.v0},
              {"pixel_aspect", c.intrinsics.pixel_aspect},
              {"height_m", c.pose.height},
              {"pitch_deg", to_deg(c.pose.pitch)},
              {"yaw_deg", to_deg(c.pose.yaw)},
              {"position_m", {c.pose.position.x(), c.pose.position.y()}}};
}

Camera read_camera(const std::string& path) { return camera_from_json(read_json(path)); }

Camera camera_ref_from_json(const json& j, const std::string& base_dir) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    return read_camera(p.string());
  }
  return camera_from_json(j);
}

CalibrationCorrection correction_from_json(const json& j) {
  const std::string what = "calibration";
  check_fields(j, {"delta_pitch_deg", "delta_u0_px", "delta_v0_px", "delta_height_m", "rms_m"},
               what);
  CalibrationCorrection c;
  c.delta_pitch = deg(number(j, "delta_pitch_deg", what));
  c.delta_u0 = number(j, "delta_u0_px", what);
  c.delta_v0 = number(j, "delta_v0_px", what);
  c.delta_height = number_or(j, "delta_height_m", 0.0, what);
  c.validate();
  return c;
}

json calibration_to_json(const CalibrationResult& r, bool with_height) {
  json j{{"delta_pitch_deg", to_deg(r.correction.delta_pitch)},
         {"delta_u0_px", r.correction.delta_u0},
         {"delta_v0_px", r.correction.delta_v0},
         {"rms_m", r.rms}};
  if (with_height) j["delta_height_m"] = r.correction.delta_height;
  return j;
}

CalibrationCorrection read_correction(const std::string& path) {
  return correction_from_json(read_json(path));
}

std::vector<ControlObservation> read_controls_csv(const std::string& path) {
  std::vector<ControlObservation> out;
  for (const auto& row : read_csv(path, {"u", "v", "X", "Y"})) {
    out.push_back({{parse_double(row[0], path), parse_double(row[1], path)},
                   {parse_double(row[2], path), parse_double(row[3], path)}});
  }
  return out;
}

std::vector<HoldoutPoint> read_holdout_csv(const std::string& path) {
  std::vector<HoldoutPoint> out;
  for (const auto& row : read_csv(path, {"image_id", "u", "v", "X", "Y"})) {
    out.push_back({row[0],
                   {parse_double(row[1], path), parse_double(row[2], path)},
                   {parse_double(row[3], path), parse_double(row[4], path)}});
  }
  return out;
}

std::string holdout_to_csv(const std::vector<HoldoutPoint>& holdout) {
  std::string s = "image_id,u,v,X,Y\n";
  for (const auto& h : holdout) {
    s += h.image_id + "," + fmt("%.17g", h.pixel.u) + "," + fmt("%.17g", h.pixel.v) + "," +
         fmt("%.17g", h.world.x) + "," + fmt("%.17g", h.world.y) + "\n";
  }
  return s;
}

std::string sensitivity_to_csv(const SensitivityCurve& curve) {
  std::string s = "alpha_deg,Y_m\n";
  for (const auto& sample : curve.samples) {
    s += fmt("%.6f", to_deg(sample.pitch)) + "," + fmt("%.6f", sample.distance) + "\n";
  }
  return s;
}

json homography_to_json(const Homography& h, const std::string& frame_src,
                        const std::string& frame_dst) {
  return json{{"h", matrix_row_major(h.matrix())}, {"frame_src", frame_src}, {"frame_dst", frame_dst}};
}

Homography homography_from_json(const json& j) {
  if (j.is_array()) return Homography(matrix_from(j, "homography"));
  check_fields(j, {"h", "frame_src", "frame_dst"}, "homography");
  if (!j.contains("h")) throw Error(ErrorCode::kParseError, "homography: missing field 'h'");
  return Homography(matrix_from(j.at("h"), "homography"));
}

CorrespondenceGraph graph_from_json(const json& j, const std::string& base_dir) {
  return guard("graph", [&] {
    check_fields(j, {"images", "edges", "controls"}, "graph");
    CorrespondenceGraph g;
    if (!j.contains("images") || !j.at("images").is_array()) {
      throw Error(ErrorCode::kParseError, "graph: 'images' must be an array");
    }
    for (const auto& im : j.at("images")) {
      check_fields(im, {"id", "camera", "anchor", "initial"}, "graph image");
      GraphImage gi;
      gi.id = im.at("id").get<std::string>();
      if (im.contains("camera")) gi.camera = camera_ref_from_json(im.at("camera"), base_dir);
      if (im.contains("initial")) gi.initial = homography_from_json(im.at("initial"));
      gi.anchor = im.value("anchor", false);
      g.images.push_back(std::move(gi));
    }
    if (j.contains("edges")) {
      for (const auto& e : j.at("edges")) {
        check_fields(e, {"a", "b", "matches"}, "graph edge");
        MatchEdge me{e.at("a").get<std::string>(), e.at("b").get<std::string>(), {}};
        for (const auto& m : e.at("matches")) {
          const auto v = numbers(m, 4, "match");
          me.matches.push_back({{v[0], v[1]}, {v[2], v[3]}});
        }
        g.edges.push_back(std::move(me));
      }
    }
    if (j.contains("controls")) {
      for (const auto& c : j.at("controls")) {
        if (!c.is_array() || c.size() != 5 || !c[0].is_string()) {
          throw Error(ErrorCode::kParseError, "control must be [image_id, u, v, X, Y]");
        }
        const auto v = numbers(json(c.begin() + 1, c.end()), 4, "control");
        g.controls.push_back({c[0].get<std::string>(), {v[0], v[1]}, {v[2], v[3]}});
      }
    }
    return g;
  });
}

json graph_to_json(const CorrespondenceGraph& g) {
  json images = json::array();
  for (const auto& im : g.images) {
    json o{{"id", im.id}};
    if (im.camera) o["camera"] = camera_to_json(*im.camera);
    if (im.initial) o["initial"] = matrix_row_major(im.initial->matrix());
    if (im.anchor) o["anchor"] = true;
    images.push_back(std::move(o));
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    json m = json::array();
    for (const auto& pm : e.matches) m.push_back({pm.a.u, pm.a.v, pm.b.u, pm.b.v});
    edges.push_back({{"a", e.image_a}, {"b", e.image_b}, {"matches", std::move(m)}});
  }
  json controls = json::array();
  for (const auto& c : g.controls) {
    controls.push_back({c.image_id, c.pixel.u, c.pixel.v, c.world.x, c.world.y});
  }
  return json{{"images", std::move(images)}, {"edges", std::move(edges)},
              {"controls", std::move(controls)}};
}

CorrespondenceGraph read_graph(const std::string& path) {
  return graph_from_json(read_json(path), parent_dir(path));
}

json solution_to_json(const BaSolution& s) {
  json hs = json::object();
  for (const auto& [id, h] : s.homographies) hs[id] = matrix_row_major(h.matrix());
  json rms = json::array();
  for (const auto& e : s.per_edge_rms) {
    rms.push_back({{"a", e.image_a}, {"b", e.image_b}, {"rms_px", e.rms}});
  }
  return json{{"homographies", std::move(hs)},
              {"cost_trace", s.cost_trace},
              {"converged", s.converged},
              {"initial_cost", s.initial_cost},
              {"final_cost", s.final_cost},
              {"iterations", s.iterations},
              {"termination", s.termination},
              {"per_edge_rms", std::move(rms)}};
}

BaSolution solution_from_json(const json& j) {
  return guard("solution", [&] {
    check_fields(j,
                 {"homographies", "cost_trace", "converged", "initial_cost", "final_cost",
                  "iterations", "termination", "per_edge_rms"},
                 "solution");
    BaSolution s;
    for (const auto& [id, m] : j.at("homographies").items()) {
      s.homographies.emplace(id, Homography(matrix_from(m, "solution homography")));
    }
    if (j.contains("cost_trace")) s.cost_trace = j.at("cost_trace").get<std::vector<double>>();
    s.converged = j.value("converged", false);
    s.initial_cost = j.value("initial_cost", 0.0);
    s.final_cost = j.value("final_cost", 0.0);
    s.iterations = j.value("iterations", 0);
    s.termination = j.value("termination", std::string());
    if (j.contains("per_edge_rms")) {
      for (const auto& e : j.at("per_edge_rms")) {
        s.per_edge_rms.push_back({e.at("a").get<std::string>(), e.at("b").get<std::string>(),
                                  e.at("rms_px").get<double>()});
      }
    }
    return s;
  });
}

LmConfig lm_config_from_json(const json& j) {
  const std::string what = "solver config";
  check_fields(j,
               {"max_iterations", "initial_lambda", "lambda_up", "lambda_down", "cost_tolerance",
                "parameter_tolerance", "loss", "huber_delta", "edge_weight", "control_weight",
                "dense_threshold"},
               what);
  LmConfig c;
  if (j.contains("max_iterations")) c.max_iterations = integer(j, "max_iterations", what);
  c.initial_lambda = number_or(j, "initial_lambda", c.initial_lambda, what);
  c.lambda_up = number_or(j, "lambda_up", c.lambda_up, what);
  c.lambda_down = number_or(j, "lambda_down", c.lambda_down, what);
  c.cost_tolerance = number_or(j, "cost_tolerance", c.cost_tolerance, what);
  c.parameter_tolerance = number_or(j, "parameter_tolerance", c.parameter_tolerance, what);
  if (j.contains("loss")) {
    const std::string loss = j.at("loss").is_string() ? j.at("loss").get<std::string>() : "";
    if (loss == "none") {
      c.loss = LossKind::kNone;
    } else if (loss == "huber") {
      c.loss = LossKind::kHuber;
    } else {
      throw Error(ErrorCode::kParseError, "solver config: loss must be 'none' or 'huber'");
    }
  }
  c.huber_delta = number_or(j, "huber_delta", c.huber_delta, what);
  c.edge_weight = number_or(j, "edge_weight", c.edge_weight, what);
  c.control_weight = number_or(j, "control_weight", c.control_weight, what);
  if (j.contains("dense_threshold")) c.dense_threshold = integer(j, "dense_threshold", what);
  c.validate();
  return c;
}

StereoRig rig_from_json(const json& j, const std::string& base_dir) {
  const std::string what = "rig";
  check_fields(j, {"camera_a", "camera_b", "baseline_m", "baseline_azimuth_deg"}, what);
  if (!j.contains("camera_a") || !j.contains("camera_b")) {
    throw Error(ErrorCode::kParseError, "rig: camera_a and camera_b are required");
  }
  StereoRig rig;
  rig.cam_a = camera_ref_from_json(j.at("camera_a"), base_dir);
  rig.cam_b = camera_ref_from_json(j.at("camera_b"), base_dir);
  rig.baseline = number(j, "baseline_m", what);
  rig.baseline_azimuth = deg(number(j, "baseline_azimuth_deg", what));
  rig.validate();
  return rig;
}

StereoRig read_rig(const std::string& path) {
  return rig_from_json(read_json(path), parent_dir(path));
}

NoiseModel noise_from_json(const json& j) {
  const std::string what = "noise";
  check_fields(j,
               {"pixel_sigma_px", "pitch_sigma_deg", "yaw_sigma_deg", "height_sigma_m",
                "outlier_fraction", "outlier_scale_px", "seed"},
               what);
  NoiseModel n;
  n.pixel_sigma = number_or(j, "pixel_sigma_px", 0.0, what);
  n.pitch_sigma = deg(number_or(j, "pitch_sigma_deg", 0.0, what));
  n.yaw_sigma = deg(number_or(j, "yaw_sigma_deg", 0.0, what));
  n.height_sigma = number_or(j, "height_sigma_m", 0.0, what);
  n.outlier_fraction = number_or(j, "outlier_fraction", 0.0, what);
  n.outlier_scale = number_or(j, "outlier_scale_px", 0.0, what);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw Error(ErrorCode::kParseError, "noise: seed must be a non-negative integer");
    }
    n.seed = j.at("seed").get<std::uint64_t>();
  }
  n.validate();
  return n;
}

json noise_to_json(const NoiseModel& n) {
  return json{{"pixel_sigma_px", n.pixel_sigma},   {"pitch_sigma_deg", to_deg(n.pitch_sigma)},
              {"yaw_sigma_deg", to_deg(n.yaw_sigma)}, {"height_sigma_m", n.height_sigma},
              {"outlier_fraction", n.outlier_fraction}, {"outlier_scale_px", n.outlier_scale},
              {"seed", n.seed}};
}

SceneSpec scene_from_json(const json& j, const std::string& base_dir) {
  return guard("scene", [&] {
    const std::string what = "scene";
    check_fields(j, {"extent_m", "layout", "cameras", "camera_grid", "control_point_count"},
                 what);
    SceneSpec s;
    if (j.contains("extent_m")) {
      const auto e = numbers(j.at("extent_m"), 2, "scene extent_m");
      s.extent_x = e[0];
      s.extent_y = e[1];
    }
    if (j.contains("layout")) {
      const json& l = j.at("layout");
      check_fields(l, {"grid", "random", "points"}, "scene layout");
      if (l.contains("grid")) {
        s.layout = PointLayout::kGrid;
        s.grid_nx = l.at("grid").at(0).get<int>();
        s.grid_ny = l.at("grid").at(1).get<int>();
      } else if (l.contains("random")) {
        s.layout = PointLayout::kRandom;
        s.random_count = l.at("random").get<int>();
      } else if (l.contains("points")) {
        s.layout = PointLayout::kExplicit;
        for (const auto& p : l.at("points")) {
          const auto v = numbers(p, 2, "scene point");
          s.explicit_points.push_back({v[0], v[1]});
        }
      }
    }
    if (j.contains("cameras")) {
      for (const auto& c : j.at("cameras")) {
        SceneCamera sc;
        json cam = c;
        if (c.is_object() && c.contains("image_size")) {
          const auto sz = numbers(c.at("image_size"), 2, "image_size");
          sc.image_width = static_cast<int>(sz[0]);
          sc.image_height = static_cast<int>(sz[1]);
          cam.erase("image_size");
        }
        sc.camera = camera_ref_from_json(cam, base_dir);
        s.cameras.push_back(sc);
      }
    }
    if (j.contains("camera_grid")) {
      const json& g = j.at("camera_grid");
      const std::string gw = "scene camera_grid";
      check_fields(g, {"rows", "cols", "height_m", "pitch_deg", "intrinsics", "image_size"}, gw);
      const json& in = g.at("intrinsics");
      check_fields(in, {"fx", "fy", "u0", "v0", "pixel_aspect"}, gw + " intrinsics");
      CameraIntrinsics intr{number(in, "fx", gw), number(in, "fy", gw), number(in, "u0", gw),
                            number(in, "v0", gw), number_or(in, "pixel_aspect", 1.0, gw)};
      const auto sz = numbers(g.at("image_size"), 2, gw + " image_size");
      auto grid = camera_grid(integer(g, "rows", gw), integer(g, "cols", gw), s.extent_x,
                              s.extent_y, number(g, "height_m", gw),
                              deg(number(g, "pitch_deg", gw)), intr, static_cast<int>(sz[0]),
                              static_cast<int>(sz[1]));
      s.cameras.insert(s.cameras.end(), grid.begin(), grid.end());
    }
    if (j.contains("control_point_count")) {
      s.control_point_count = integer(j, "control_point_count", what);
    }
    s.validate();
    return s;
  });
}

SceneSpec read_scene(const std::string& path) {
  return scene_from_json(read_json(path), parent_dir(path));
}

std::string error_report_csv(const ErrorReport& r) {
  std::string s = "trial,camera,x_true,y_true,x_est,y_est,abs_error_m,rel_error\n";
  for (const auto& p : r.points) {
    s += std::to_string(p.trial) + "," + std::to_string(p.camera) + "," + fmt("%.17g", p.truth.x) +
         "," + fmt("%.17g", p.truth.y) + "," + fmt("%.17g", p.estimate.x) + "," +
         fmt("%.17g", p.estimate.y) + "," + fmt("%.17g", p.abs_error) + "," +
         fmt("%.17g", p.rel_error) + "\n";
  }
  return s;
}

json error_summary_json(const ErrorReport& r) {
  auto summary = [](const ErrorSummary& s) {
    return json{{"mean", s.mean}, {"median", s.median}, {"p95", s.p95}, {"max", s.max}};
  };
  return json{{"trials", r.trials},
              {"points", r.points.size()},
              {"failures", r.failures},
              {"not_visible", r.not_visible},
              {"abs_error_m", summary(r.abs)},
              {"rel_error", summary(r.rel)}};
}

json observations_to_json(const ObservationSet& set) {
  json cams = json::array();
  for (const auto& c : set.cameras) {
    json obs = json::array();
    for (const auto& o : c.observations) {
      obs.push_back({{"truth", {o.truth.x, o.truth.y}},
                     {"clean", {o.clean.u, o.clean.v}},
                     {"observed", {o.observed.u, o.observed.v}},
                     {"outlier", o.outlier}});
    }
    cams.push_back({{"nominal", camera_to_json(c.nominal)},
                    {"actual", camera_to_json(c.actual)},
                    {"not_visible", c.not_visible},
                    {"observations", std::move(obs)}});
  }
  return json{{"cameras", std::move(cams)}, {"not_visible", set.not_visible}};
}

}  // namespace planar::io
