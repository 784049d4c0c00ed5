#include "planar/cli.h"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "planar/error.h"
#include "planar/homography.h"
#include "planar/io.h"
#include "planar/mono_ranging.h"
#include "planar/mosaic_ba.h"
#include "planar/raster.h"
#include "planar/sim_harness.h"
#include "planar/stereo_ranging.h"

namespace planar {

using nlohmann::json;

namespace {

// Thrown by handlers for argument problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string plain(double v, const char* format = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  std::string s = buf;
  // Values that round to zero print without a sign.
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string meters(double v) { return plain(v, "%.4f"); }

std::string degrees(double radians) { return plain(to_deg(radians), "%.3f"); }

std::optional<std::pair<double, double>> parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) return std::nullopt;
  try {
    std::size_t a = 0;
    std::size_t b = 0;
    const std::string first = s.substr(0, comma);
    const std::string second = s.substr(comma + 1);
    const double x = std::stod(first, &a);
    const double y = std::stod(second, &b);
    if (a != first.size() || b != second.size() || !std::isfinite(x) || !std::isfinite(y)) {
      return std::nullopt;
    }
    return std::make_pair(x, y);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<double> parse_extent(const std::string& s) {
  std::vector<double> e;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    try {
      e.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw UsageError("--extent: '" + cell + "' is not a number");
  }
  if (e.size() != 4 || !(e[0] < e[2]) || !(e[1] < e[3])) {
    throw UsageError("--extent expects x0,y0,x1,y1 with x0 < x1 and y0 < y1");
  }
  return e;
}

PixelPoint to_pixel(const std::string& s) {
  const auto p = parse_pair(s);
  return {p->first, p->second};
}

// CLI11 validator for "a,b".
const CLI::Validator kPair(
    [](std::string& s) {
      return parse_pair(s) ? std::string() : "expected two comma-separated numbers, got '" + s + "'";
    },
    "U,V");

void write_lines(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

bool want_color(const std::ostream& err) {
  return &err == &std::cerr && std::getenv("NO_COLOR") == nullptr && isatty(STDERR_FILENO) == 1;
}

struct Options {
  bool json = false;
  std::optional<std::uint64_t> seed;
  int workers = 0;

  // mono
  std::string camera;
  std::string pixel;
  std::string calib;
  bool strict_shallow = false;

  // stereo
  std::string rig;
  std::string pixel_a;
  std::string pixel_b;

  // sensitivity
  double height = 8.24;
  double alpha_min = 0.5;
  double alpha_max = 30.0;
  double step = 0.001;
  std::string out;

  // calibrate
  std::string points;
  bool with_height = false;

  // bev
  double scale = 1.0;
  std::string image;
  std::string extent;
  int fill = 0;
  std::string interp = "bilinear";

  // mosaic
  std::string graph;
  std::string config;
  std::string loss;
  std::string solution;
  std::string holdout;

  // sim
  std::string spec;
  std::string noise;
  int trials = 1000;
  std::string forward = "bearing";
  int matches_per_edge = 30;
  int holdout_count = 20;
};

class Commands {
 public:
  Commands(const Options& o, std::ostream& out, std::ostream& err)
      : o_(o), out_(out), err_(err) {}

  void mono() {
    const Camera cam = io::read_camera(o_.camera);
    MonoRangingModel model{cam.intrinsics, cam.pose, {}};
    if (!o_.calib.empty()) model.corrections = io::read_correction(o_.calib);
    model.strict_shallow = o_.strict_shallow;
    const PixelPoint p = to_pixel(o_.pixel);
    const PlanePoint local = locate_camera_frame(model, p);
    const PlanePoint world = locate(model, p);
    const double beta = depression_angle(model, p);
    const bool shallow = is_too_shallow(model, p);
    const double h = model.effective_height();
    const double slant = std::sqrt(local.x * local.x + local.y * local.y + h * h);
    if (shallow) {
      warn("RayTooShallow: depression angle " + degrees(beta) +
           " deg is below the reliability threshold");
    }
    if (o_.json) {
      out_ << json{{"X_m", local.x},        {"Y_m", local.y},
                   {"slant_m", slant},      {"world_x_m", world.x},
                   {"world_y_m", world.y},  {"depression_deg", to_deg(beta)},
                   {"too_shallow", shallow}}
                  .dump(2)
           << '\n';
      return;
    }
    write_lines(out_, {{"X_m", meters(local.x)},
                       {"Y_m", meters(local.y)},
                       {"slant_m", meters(slant)},
                       {"world_x_m", meters(world.x)},
                       {"world_y_m", meters(world.y)},
                       {"depression_deg", degrees(beta)}});
  }

  void stereo() {
    const StereoRig rig = io::read_rig(o_.rig);
    const TriangleSolution s = range_target(rig, to_pixel(o_.pixel_a), to_pixel(o_.pixel_b));
    if (o_.json) {
      out_ << json{{"alpha_deg", to_deg(s.alpha)}, {"beta_deg", to_deg(s.beta)},
                   {"gamma_deg", to_deg(s.gamma)}, {"dist_a_m", s.dist_a},
                   {"dist_b_m", s.dist_b},         {"target_x_m", s.target.x},
                   {"target_y_m", s.target.y}}
                  .dump(2)
           << '\n';
      return;
    }
    write_lines(out_, {{"alpha_deg", degrees(s.alpha)},
                       {"beta_deg", degrees(s.beta)},
                       {"gamma_deg", degrees(s.gamma)},
                       {"dist_a_m", meters(s.dist_a)},
                       {"dist_b_m", meters(s.dist_b)},
                       {"target_x_m", meters(s.target.x)},
                       {"target_y_m", meters(s.target.y)}});
  }

  void sensitivity() {
    const SensitivityCurve curve = sensitivity_sweep(o_.height, {deg(o_.alpha_min)},
                                                     {deg(o_.alpha_max)}, {deg(o_.step)});
    const std::string csv = io::sensitivity_to_csv(curve);
    if (o_.out.empty()) {
      out_ << csv;
      return;
    }
    io::write_text(o_.out, csv);
    const auto& first = curve.samples.front();
    const auto& last = curve.samples.back();
    if (o_.json) {
      out_ << json{{"rows", curve.samples.size()}, {"out", o_.out},
                   {"first", {{"alpha_deg", to_deg(first.pitch)}, {"Y_m", first.distance}}},
                   {"last", {{"alpha_deg", to_deg(last.pitch)}, {"Y_m", last.distance}}}}
                  .dump(2)
           << '\n';
      return;
    }
    write_lines(out_, {{"rows", std::to_string(curve.samples.size())},
                       {"first_alpha_deg", degrees(first.pitch)},
                       {"first_Y_m", meters(first.distance)},
                       {"last_alpha_deg", degrees(last.pitch)},
                       {"last_Y_m", meters(last.distance)}});
  }

  void calibrate() {
    const Camera cam = io::read_camera(o_.camera);
    const auto obs = io::read_controls_csv(o_.points);
    CalibrationOptions options;
    options.estimate_height = o_.with_height;
    const CalibrationResult r = fit_calibration(cam.intrinsics, cam.pose, obs, options);
    const json j = io::calibration_to_json(r, o_.with_height);
    io::write_text(o_.out, j.dump(2) + "\n");
    if (o_.json) {
      out_ << j.dump(2) << '\n';
      return;
    }
    std::vector<std::pair<std::string, std::string>> kv{
        {"delta_pitch_deg", degrees(r.correction.delta_pitch)},
        {"delta_u0_px", plain(r.correction.delta_u0, "%.4f")},
        {"delta_v0_px", plain(r.correction.delta_v0, "%.4f")}};
    if (o_.with_height) kv.emplace_back("delta_height_m", meters(r.correction.delta_height));
    kv.emplace_back("rms_m", meters(r.rms));
    kv.emplace_back("iterations", std::to_string(r.iterations));
    write_lines(out_, kv);
  }

  void bev() {
    const Camera cam = io::read_camera(o_.camera);
    const Homography h = bev_from_camera(cam.intrinsics, cam.pose, o_.scale);
    if (!o_.pixel.empty()) {
      const PlanePoint g = apply(h, to_pixel(o_.pixel));
      if (o_.json) {
        out_ << json{{"x_m", g.x / o_.scale},
                     {"y_m", g.y / o_.scale},
                     {"bev_x_px", g.x},
                     {"bev_y_px", g.y},
                     {"homography", io::homography_to_json(h, "image_px", "bev_px")}}
                    .dump(2)
             << '\n';
        return;
      }
      write_lines(out_, {{"x_m", meters(g.x / o_.scale)},
                         {"y_m", meters(g.y / o_.scale)},
                         {"bev_x_px", plain(g.x, "%.4f")},
                         {"bev_y_px", plain(g.y, "%.4f")}});
      return;
    }
    const Raster src = read_raster(o_.image);
    // Raster rows run downward while pixel v runs upward.
    Eigen::Matrix3d flip_src;
    flip_src << 1, 0, 0, 0, -1, src.height - 1, 0, 0, 1;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    if (!o_.extent.empty()) {
      const std::vector<double> e = parse_extent(o_.extent);
      x0 = e[0], y0 = e[1], x1 = e[2], y1 = e[3];
    } else {
      footprint(cam, src, &x0, &y0, &x1, &y1);
    }
    // BEV raster: column grows east, row grows south.
    Eigen::Matrix3d to_raster;
    to_raster << 1, 0, -x0 * o_.scale, 0, -1, y1 * o_.scale, 0, 0, 1;
    const Homography full(to_raster * h.matrix() * flip_src);
    RasterBounds bounds{0.0, 0.0, static_cast<int>(std::ceil((x1 - x0) * o_.scale)),
                        static_cast<int>(std::ceil((y1 - y0) * o_.scale))};
    WarpOptions wo;
    wo.interp = o_.interp == "nearest" ? Interpolation::kNearest : Interpolation::kBilinear;
    wo.fill = static_cast<std::uint8_t>(o_.fill);
    wo.workers = o_.workers > 0 ? o_.workers : 1;
    const Raster dst = warp_raster(full, src, bounds, wo);
    write_raster(o_.out, dst);
    if (o_.json) {
      out_ << json{{"out", o_.out},
                   {"width", dst.width},
                   {"height", dst.height},
                   {"extent_m", {x0, y0, x1, y1}},
                   {"homography", io::homography_to_json(full, "raster_px", "bev_raster_px")}}
                  .dump(2)
           << '\n';
      return;
    }
    write_lines(out_, {{"out", o_.out},
                       {"width", std::to_string(dst.width)},
                       {"height", std::to_string(dst.height)},
                       {"extent_m", meters(x0) + "," + meters(y0) + "," + meters(x1) + "," +
                                        meters(y1)}});
  }

  void mosaic_solve() {
    const CorrespondenceGraph graph = io::read_graph(o_.graph);
    LmConfig config = o_.config.empty() ? LmConfig{} : io::lm_config_from_json(io::read_json(o_.config));
    if (o_.loss == "huber") config.loss = LossKind::kHuber;
    if (o_.loss == "none") config.loss = LossKind::kNone;
    const BaSolution s = solve(graph, config);
    io::write_text(o_.out, io::solution_to_json(s).dump(2) + "\n");
    if (o_.json) {
      out_ << json{{"converged", s.converged},
                   {"iterations", s.iterations},
                   {"initial_cost", s.initial_cost},
                   {"final_cost", s.final_cost},
                   {"max_edge_rms_px", s.max_edge_rms()},
                   {"termination", s.termination}}
                  .dump(2)
           << '\n';
      return;
    }
    write_lines(out_, {{"converged", s.converged ? "true" : "false"},
                       {"iterations", std::to_string(s.iterations)},
                       {"initial_cost", plain(s.initial_cost, "%.6e")},
                       {"final_cost", plain(s.final_cost, "%.6e")},
                       {"accepted_steps", std::to_string(s.cost_trace.size() - 1)},
                       {"max_edge_rms_px", plain(s.max_edge_rms(), "%.4f")},
                       {"termination", s.termination}});
  }

  void mosaic_eval() {
    const BaSolution s = io::solution_from_json(io::read_json(o_.solution));
    const HoldoutReport r = evaluate(s, io::read_holdout_csv(o_.holdout));
    if (o_.json) {
      json j{{"points", r.errors.size()}, {"errors_m", r.errors}};
      j["rms_m"] = r.rms ? json(*r.rms) : json(nullptr);
      j["max_m"] = r.max ? json(*r.max) : json(nullptr);
      out_ << j.dump(2) << '\n';
      return;
    }
    write_lines(out_, {{"points", std::to_string(r.errors.size())},
                       {"rms_m", r.rms ? meters(*r.rms) : "none"},
                       {"max_m", r.max ? meters(*r.max) : "none"}});
  }

  void sim_generate() {
    const SceneSpec spec = io::read_scene(o_.spec);
    const NoiseModel noise = noise_model();
    const ObservationSet set = generate_observations(spec, noise);
    prepare_out_dir();
    io::write_text(out_path("observations.json"), io::observations_to_json(set).dump(2) + "\n");
    std::size_t n = 0;
    for (const auto& c : set.cameras) n += c.observations.size();
    report_kv({{"cameras", json(set.cameras.size())},
               {"observations", json(n)},
               {"not_visible", json(set.not_visible)},
               {"out", json(out_path("observations.json"))}});
  }

  void sim_evaluate(bool stereo) {
    const SceneSpec spec = io::read_scene(o_.spec);
    const NoiseModel noise = noise_model();
    ErrorReport r;
    if (stereo) {
      StereoEvalOptions so;
      so.forward = o_.forward == "pinhole" ? StereoForwardModel::kPinhole
                                           : StereoForwardModel::kBearing;
      so.workers = o_.workers;
      r = evaluate_stereo(spec, noise, o_.trials, so);
    } else {
      r = evaluate_mono(spec, noise, o_.trials, EvalOptions{o_.workers});
    }
    const json summary = io::error_summary_json(r);
    if (!o_.out.empty()) {
      prepare_out_dir();
      io::write_text(out_path("errors.csv"), io::error_report_csv(r));
      io::write_text(out_path("summary.json"), summary.dump(2) + "\n");
    }
    if (o_.json) {
      out_ << summary.dump(2) << '\n';
      return;
    }
    // Keys mirror the JSON summary, nested fields joined with '.'.
    write_lines(out_, {{"trials", std::to_string(r.trials)},
                       {"points", std::to_string(r.points.size())},
                       {"failures", std::to_string(r.failures)},
                       {"not_visible", std::to_string(r.not_visible)},
                       {"abs_error_m.mean", meters(r.abs.mean)},
                       {"abs_error_m.median", meters(r.abs.median)},
                       {"abs_error_m.p95", meters(r.abs.p95)},
                       {"abs_error_m.max", meters(r.abs.max)},
                       {"rel_error.median", plain(r.rel.median, "%.6f")},
                       {"rel_error.p95", plain(r.rel.p95, "%.6f")}});
  }

  void sim_make_graph() {
    const SceneSpec spec = io::read_scene(o_.spec);
    const NoiseModel noise = noise_model();
    MosaicSimOptions mo;
    mo.matches_per_edge = o_.matches_per_edge;
    mo.holdout_count = o_.holdout_count;
    const SyntheticMosaic sim = generate_ba_graph(spec, noise, mo);
    prepare_out_dir();
    io::write_text(out_path("graph.json"), io::graph_to_json(sim.graph).dump(2) + "\n");
    io::write_text(out_path("holdout.csv"), io::holdout_to_csv(sim.holdout));
    json truth = json::object();
    for (const auto& [id, h] : sim.truth) {
      truth[id] = io::homography_to_json(h, id, "world_m");
    }
    io::write_text(out_path("truth.json"), truth.dump(2) + "\n");
    report_kv({{"images", json(sim.graph.images.size())},
               {"edges", json(sim.graph.edges.size())},
               {"controls", json(sim.graph.controls.size())},
               {"holdout", json(sim.holdout.size())},
               {"out", json(o_.out)}});
  }

 private:
  void warn(const std::string& msg) {
    if (want_color(err_)) {
      err_ << "\033[33mwarning:\033[0m " << msg << '\n';
    } else {
      err_ << "warning: " << msg << '\n';
    }
  }

  NoiseModel noise_model() const {
    NoiseModel n = o_.noise.empty() ? NoiseModel{} : io::noise_from_json(io::read_json(o_.noise));
    if (o_.seed) n.seed = *o_.seed;
    return n;
  }

  void prepare_out_dir() const {
    std::error_code ec;
    std::filesystem::create_directories(o_.out, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + o_.out + "': " + ec.message());
  }

  std::string out_path(const std::string& name) const {
    return (std::filesystem::path(o_.out) / name).string();
  }

  void report_kv(const std::vector<std::pair<std::string, json>>& kv) {
    if (o_.json) {
      json j = json::object();
      for (const auto& [k, v] : kv) j[k] = v;
      out_ << j.dump(2) << '\n';
      return;
    }
    for (const auto& [k, v] : kv) {
      out_ << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  }

  // Ground bounds of the image area below the horizon, limited to 50 camera
  // heights from the foot point.
  static void footprint(const Camera& cam, const Raster& src, double* x0, double* y0,
                        double* x1, double* y1) {
    const MonoRangingModel model{cam.intrinsics, cam.pose, {}};
    const double limit = 50.0 * cam.pose.height;
    *x0 = *y0 = std::numeric_limits<double>::infinity();
    *x1 = *y1 = -std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 16; ++a) {
      for (int b = 0; b <= 16; ++b) {
        const PixelPoint p{(src.width - 1) * a / 16.0, (src.height - 1) * b / 16.0};
        PlanePoint local;
        try {
          local = locate_camera_frame(model, p);
        } catch (const Error&) {
          continue;
        }
        if (std::hypot(local.x, local.y) > limit) continue;
        const PlanePoint w = camera_to_world(cam.pose, local);
        *x0 = std::min(*x0, w.x);
        *y0 = std::min(*y0, w.y);
        *x1 = std::max(*x1, w.x);
        *y1 = std::max(*y1, w.y);
      }
    }
    if (!(*x0 < *x1 && *y0 < *y1)) {
      throw Error(ErrorCode::kEmptyBounds, "image shows no ground within range; pass --extent");
    }
  }

  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Planar-scene metric measurement from calibrated cameras", "planar_measure"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json, "Emit machine-readable JSON");
  app.add_option("--seed", o.seed, "Override the noise-model seed");
  app.add_option("--workers", o.workers, "Worker threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  auto* mono = app.add_subcommand("mono", "Locate a ground point seen by one camera");
  mono->add_option("--camera", o.camera, "Camera config JSON")->required()->check(CLI::ExistingFile);
  mono->add_option("--pixel", o.pixel, "Pixel u,v")->required()->check(kPair);
  mono->add_option("--calib", o.calib, "Calibration corrections JSON")->check(CLI::ExistingFile);
  mono->add_flag("--strict-shallow", o.strict_shallow, "Reject rays below the shallow threshold");

  auto* stereo = app.add_subcommand("stereo", "Range a target seen by two cameras");
  stereo->add_option("--rig", o.rig, "Rig JSON")->required()->check(CLI::ExistingFile);
  stereo->add_option("--pixel-a", o.pixel_a, "Pixel u,v in camera A")->required()->check(kPair);
  stereo->add_option("--pixel-b", o.pixel_b, "Pixel u,v in camera B")->required()->check(kPair);

  auto* sens = app.add_subcommand("sensitivity", "Image-center distance over a pitch sweep");
  sens->add_option("--height", o.height, "Camera height, meters")->capture_default_str();
  sens->add_option("--alpha-min", o.alpha_min, "Minimum pitch, degrees")->capture_default_str();
  sens->add_option("--alpha-max", o.alpha_max, "Maximum pitch, degrees")->capture_default_str();
  sens->add_option("--step", o.step, "Pitch step, degrees")->capture_default_str();
  sens->add_option("--out", o.out, "CSV output (stdout when absent)");

  auto* calib = app.add_subcommand("calibrate", "Fit pitch and principal-point corrections");
  calib->add_option("--camera", o.camera, "Camera config JSON")->required()->check(CLI::ExistingFile);
  calib->add_option("--points", o.points, "Control CSV u,v,X,Y")->required()->check(CLI::ExistingFile);
  calib->add_option("--out", o.out, "Corrections JSON output")->required();
  calib->add_flag("--with-height", o.with_height, "Also estimate a height correction");

  auto* bev = app.add_subcommand("bev", "Bird's-eye view of a pixel or an image");
  bev->add_option("--camera", o.camera, "Camera config JSON")->required()->check(CLI::ExistingFile);
  bev->add_option("--scale", o.scale, "Output pixels per meter")->capture_default_str()->check(CLI::PositiveNumber);
  auto* bev_pixel = bev->add_option("--pixel", o.pixel, "Pixel u,v")->check(kPair);
  auto* bev_image = bev->add_option("--image", o.image, "Input raster")->check(CLI::ExistingFile);
  auto* bev_out = bev->add_option("--out", o.out, "Output raster");
  bev->add_option("--extent", o.extent, "Ground bounds x0,y0,x1,y1 in meters");
  bev->add_option("--fill", o.fill, "Fill value for unmapped pixels")->capture_default_str()->check(CLI::Range(0, 255));
  bev->add_option("--interp", o.interp, "nearest or bilinear")->capture_default_str()
      ->check(CLI::IsMember({"nearest", "bilinear"}));
  bev_pixel->excludes(bev_image);
  bev_image->needs(bev_out);

  auto* mosaic = app.add_subcommand("mosaic", "Bundle-adjust or evaluate a mosaic");
  mosaic->require_subcommand(1);
  auto* msolve = mosaic->add_subcommand("solve", "Solve a correspondence graph");
  msolve->add_option("--graph", o.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  msolve->add_option("--out", o.out, "Solution JSON output")->required();
  msolve->add_option("--config", o.config, "Solver config JSON")->check(CLI::ExistingFile);
  msolve->add_option("--loss", o.loss, "none or huber")->check(CLI::IsMember({"none", "huber"}));
  auto* meval = mosaic->add_subcommand("eval", "Holdout error of a solution");
  meval->add_option("--solution", o.solution, "Solution JSON")->required()->check(CLI::ExistingFile);
  meval->add_option("--holdout", o.holdout, "Holdout CSV image_id,u,v,X,Y")
      ->required()
      ->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("sim", "Synthetic scenes and error campaigns");
  sim->require_subcommand(1);
  auto add_common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--spec", o.spec, "Scene JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--noise", o.noise, "Noise JSON")->check(CLI::ExistingFile);
    auto* opt = sub->add_option("--out", o.out, "Output directory");
    if (out_required) opt->required();
  };
  auto* sgen = sim->add_subcommand("generate", "Write noisy observations");
  add_common(sgen, true);
  auto* smono = sim->add_subcommand("evaluate-mono", "Monte-Carlo monocular error");
  add_common(smono, false);
  smono->add_option("--trials", o.trials, "Trials")->capture_default_str()->check(CLI::PositiveNumber);
  auto* sstereo = sim->add_subcommand("evaluate-stereo", "Monte-Carlo stereo error");
  add_common(sstereo, false);
  sstereo->add_option("--trials", o.trials, "Trials")->capture_default_str()->check(CLI::PositiveNumber);
  sstereo->add_option("--forward", o.forward, "bearing or pinhole")->capture_default_str()
      ->check(CLI::IsMember({"bearing", "pinhole"}));
  auto* sgraph = sim->add_subcommand("make-graph", "Write a synthetic mosaic graph");
  add_common(sgraph, true);
  sgraph->add_option("--matches-per-edge", o.matches_per_edge, "Matches per edge")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sgraph->add_option("--holdout-count", o.holdout_count, "Holdout points")->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
    if (bev->parsed() && o.pixel.empty() && o.image.empty()) {
      throw CLI::ValidationError("bev", "one of --pixel or --image is required");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Commands cmd(o, out, err);
  const bool color = want_color(err);
  try {
    if (mono->parsed()) {
      cmd.mono();
    } else if (stereo->parsed()) {
      cmd.stereo();
    } else if (sens->parsed()) {
      cmd.sensitivity();
    } else if (calib->parsed()) {
      cmd.calibrate();
    } else if (bev->parsed()) {
      cmd.bev();
    } else if (msolve->parsed()) {
      cmd.mosaic_solve();
    } else if (meval->parsed()) {
      cmd.mosaic_eval();
    } else if (sgen->parsed()) {
      cmd.sim_generate();
    } else if (smono->parsed()) {
      cmd.sim_evaluate(false);
    } else if (sstereo->parsed()) {
      cmd.sim_evaluate(true);
    } else if (sgraph->parsed()) {
      cmd.sim_make_graph();
    }
  } catch (const Error& e) {
    err << (color ? "\033[31merror:\033[0m " : "error: ") << e.what() << '\n';
    // A bad sweep range is an argument problem.
    return sens->parsed() && e.code() == ErrorCode::kInvalidRange ? 2 : 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace planar
