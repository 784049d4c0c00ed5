#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "planar/cli.h"
#include "planar/error.h"
#include "planar/geometry.h"
#include "planar/homography.h"
#include "planar/mono_ranging.h"
#include "planar/mosaic_ba.h"
#include "planar/sim_harness.h"
#include "planar/stereo_ranging.h"

namespace py = pybind11;
using namespace planar;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

std::string repr2(const char* name, const char* a, double x, const char* b, double y) {
  std::ostringstream s;
  s.precision(17);
  s << name << "(" << a << "=" << x << ", " << b << "=" << y << ")";
  return s.str();
}

py::dict summary_dict(const ErrorSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["median"] = s.median;
  d["p95"] = s.p95;
  d["max"] = s.max;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Plane-metric ranging from calibrated cameras";

  static py::exception<Error> planar_error(m, "PlanarError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(planar_error.ptr())(e.what());
      inst.attr("code") = std::string(e.name());
      PyErr_SetObject(planar_error.ptr(), inst.ptr());
    }
  });

  m.def("deg", [](double d) { return deg(d); }, "Degrees to radians.");
  m.def("to_deg", &to_deg, "Radians to degrees.");

  py::class_<PixelPoint>(m, "PixelPoint")
      .def(py::init<>())
      .def(py::init([](double u, double v) { return PixelPoint{u, v}; }), py::arg("u"), py::arg("v"))
      .def(py::init([](py::tuple t) { return PixelPoint{t[0].cast<double>(), t[1].cast<double>()}; }))
      .def_readwrite("u", &PixelPoint::u)
      .def_readwrite("v", &PixelPoint::v)
      .def("__iter__", [](const PixelPoint& p) { return py::iter(py::make_tuple(p.u, p.v)); })
      .def("__repr__", [](const PixelPoint& p) { return repr2("PixelPoint", "u", p.u, "v", p.v); });
  py::implicitly_convertible<py::tuple, PixelPoint>();

  py::class_<PlanePoint>(m, "PlanePoint")
      .def(py::init<>())
      .def(py::init([](double x, double y) { return PlanePoint{x, y}; }), py::arg("x"), py::arg("y"))
      .def(py::init([](py::tuple t) { return PlanePoint{t[0].cast<double>(), t[1].cast<double>()}; }))
      .def_readwrite("x", &PlanePoint::x)
      .def_readwrite("y", &PlanePoint::y)
      .def("__iter__", [](const PlanePoint& p) { return py::iter(py::make_tuple(p.x, p.y)); })
      .def("__repr__", [](const PlanePoint& p) { return repr2("PlanePoint", "x", p.x, "y", p.y); });
  py::implicitly_convertible<py::tuple, PlanePoint>();

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double u0, double v0, double pixel_aspect) {
             CameraIntrinsics c{fx, fy, u0, v0, pixel_aspect};
             c.validate();
             return c;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("u0"), py::arg("v0"), py::arg("pixel_aspect") = 1.0)
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("u0", &CameraIntrinsics::u0)
      .def_readwrite("v0", &CameraIntrinsics::v0)
      .def_readwrite("pixel_aspect", &CameraIntrinsics::pixel_aspect);

  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init([](double height, double pitch, double yaw, Eigen::Vector2d position) {
             CameraPose p;
             p.height = height;
             p.pitch = pitch;
             p.yaw = yaw;
             p.position = position;
             p.validate();
             return p;
           }),
           py::arg("height"), py::arg("pitch"), py::arg("yaw") = 0.0,
           py::arg("position") = Eigen::Vector2d::Zero().eval())
      .def_readwrite("height", &CameraPose::height)
      .def_readwrite("pitch", &CameraPose::pitch)
      .def_readwrite("yaw", &CameraPose::yaw)
      .def_readwrite("position", &CameraPose::position);

  py::class_<Camera>(m, "Camera")
      .def(py::init([](const CameraIntrinsics& i, const CameraPose& p) { return Camera{i, p}; }),
           py::arg("intrinsics"), py::arg("pose"))
      .def_readwrite("intrinsics", &Camera::intrinsics)
      .def_readwrite("pose", &Camera::pose);

  // Monocular ranging.
  py::class_<CalibrationCorrection>(m, "CalibrationCorrection")
      .def(py::init([](double dp, double du, double dv, double dh) {
             return CalibrationCorrection{dp, du, dv, dh};
           }),
           py::arg("delta_pitch") = 0.0, py::arg("delta_u0") = 0.0, py::arg("delta_v0") = 0.0,
           py::arg("delta_height") = 0.0)
      .def_readwrite("delta_pitch", &CalibrationCorrection::delta_pitch)
      .def_readwrite("delta_u0", &CalibrationCorrection::delta_u0)
      .def_readwrite("delta_v0", &CalibrationCorrection::delta_v0)
      .def_readwrite("delta_height", &CalibrationCorrection::delta_height);

  py::class_<MonoRangingModel>(m, "MonoRangingModel")
      .def(py::init([](const CameraIntrinsics& i, const CameraPose& p,
                       std::optional<CalibrationCorrection> c, bool strict) {
             MonoRangingModel model;
             model.intrinsics = i;
             model.pose = p;
             model.corrections = c;
             model.strict_shallow = strict;
             model.validate();
             return model;
           }),
           py::arg("intrinsics"), py::arg("pose"), py::arg("corrections") = std::nullopt,
           py::arg("strict_shallow") = false)
      .def_readwrite("intrinsics", &MonoRangingModel::intrinsics)
      .def_readwrite("pose", &MonoRangingModel::pose)
      .def_readwrite("corrections", &MonoRangingModel::corrections)
      .def_readwrite("strict_shallow", &MonoRangingModel::strict_shallow);

  m.def("depression_angle", &depression_angle, py::arg("model"), py::arg("pixel"));
  m.def("longitudinal_distance", &longitudinal_distance, py::arg("model"), py::arg("pixel"));
  m.def("lateral_coordinate", &lateral_coordinate, py::arg("model"), py::arg("pixel"));
  m.def("locate", &locate, py::arg("model"), py::arg("pixel"));
  m.def("project_to_pixel", &project_to_pixel, py::arg("model"), py::arg("point"));

  m.def(
      "sensitivity_sweep",
      [](double height, double pitch_min, double pitch_max, double step) {
        const SensitivityCurve c = sensitivity_sweep(height, {pitch_min}, {pitch_max}, {step});
        Eigen::VectorXd pitch(c.samples.size());
        Eigen::VectorXd distance(c.samples.size());
        for (std::size_t i = 0; i < c.samples.size(); ++i) {
          pitch[i] = c.samples[i].pitch;
          distance[i] = c.samples[i].distance;
        }
        return py::make_tuple(pitch, distance);
      },
      py::arg("height"), py::arg("pitch_min"), py::arg("pitch_max"), py::arg("step"),
      "Returns (pitch, distance) arrays; angles in radians.");

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("correction", &CalibrationResult::correction)
      .def_readonly("rms", &CalibrationResult::rms)
      .def_readonly("iterations", &CalibrationResult::iterations);

  m.def(
      "fit_calibration",
      [](const CameraIntrinsics& i, const CameraPose& p, const Points& pixels, const Points& world,
         bool estimate_height) {
        if (pixels.rows() != world.rows()) throw Error(ErrorCode::kInvalidArgument, "row count mismatch");
        std::vector<ControlObservation> obs;
        for (Eigen::Index r = 0; r < pixels.rows(); ++r) {
          obs.push_back({{pixels(r, 0), pixels(r, 1)}, {world(r, 0), world(r, 1)}});
        }
        CalibrationOptions options;
        options.estimate_height = estimate_height;
        return fit_calibration(i, p, obs, options);
      },
      py::arg("intrinsics"), py::arg("pose"), py::arg("pixels"), py::arg("world"),
      py::arg("estimate_height") = false);

  // Homographies.
  py::class_<Homography>(m, "Homography")
      .def(py::init<const Eigen::Matrix3d&>(), py::arg("matrix"))
      .def_property_readonly("matrix", &Homography::matrix)
      .def("inverse", &Homography::inverse)
      .def("compose", &Homography::compose, py::arg("other"))
      .def("apply", [](const Homography& h, const Eigen::Vector2d& p) { return apply(h, p); }, py::arg("point"));

  m.def(
      "estimate_dlt",
      [](const Points& src, const Points& dst, std::optional<double> ransac_threshold, std::uint64_t seed) {
        if (src.rows() != dst.rows()) throw Error(ErrorCode::kInvalidArgument, "row count mismatch");
        std::vector<Correspondence> corr;
        for (Eigen::Index r = 0; r < src.rows(); ++r) corr.push_back({src.row(r).transpose(), dst.row(r).transpose()});
        std::optional<RansacConfig> robust;
        if (ransac_threshold) {
          robust = RansacConfig{};
          robust->threshold = *ransac_threshold;
          robust->seed = seed;
        }
        const Estimate e = estimate_dlt(corr, robust);
        py::dict report;
        report["inlier_count"] = e.report.inlier_count;
        report["rms_error"] = e.report.rms_error;
        report["condition_warning"] = e.report.condition_warning;
        report["inliers"] = e.report.inliers;
        return py::make_tuple(e.homography, report);
      },
      py::arg("src"), py::arg("dst"), py::arg("ransac_threshold") = std::nullopt, py::arg("seed") = 0);

  m.def("bev_from_camera", &bev_from_camera, py::arg("intrinsics"), py::arg("pose"), py::arg("ground_scale"));

  // Stereo ranging.
  py::class_<StereoRig>(m, "StereoRig")
      .def_readonly("cam_a", &StereoRig::cam_a)
      .def_readonly("cam_b", &StereoRig::cam_b)
      .def_readonly("baseline", &StereoRig::baseline)
      .def_readonly("baseline_azimuth", &StereoRig::baseline_azimuth);

  py::class_<TriangleSolution>(m, "TriangleSolution")
      .def_readonly("alpha", &TriangleSolution::alpha)
      .def_readonly("beta", &TriangleSolution::beta)
      .def_readonly("gamma", &TriangleSolution::gamma)
      .def_readonly("dist_a", &TriangleSolution::dist_a)
      .def_readonly("dist_b", &TriangleSolution::dist_b)
      .def_readonly("target", &TriangleSolution::target);

  m.def("rig_from_cameras", &rig_from_cameras, py::arg("cam_a"), py::arg("cam_b"));
  m.def(
      "solve_triangle",
      [](double baseline, double alpha, double beta) { return solve_triangle(baseline, {alpha}, {beta}); },
      py::arg("baseline"), py::arg("alpha"), py::arg("beta"));
  m.def(
      "range_target",
      [](const StereoRig& rig, const PixelPoint& a, const PixelPoint& b) { return range_target(rig, a, b); },
      py::arg("rig"), py::arg("pixel_a"), py::arg("pixel_b"));
  m.def("project_bearing", &project_bearing, py::arg("camera"), py::arg("target"));

  // Simulation.
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init([](double pixel, double pitch, double yaw, double height, double outlier_fraction,
                       double outlier_scale, std::uint64_t seed) {
             NoiseModel n{pixel, pitch, yaw, height, outlier_fraction, outlier_scale, seed};
             n.validate();
             return n;
           }),
           py::arg("pixel_sigma") = 0.0, py::arg("pitch_sigma") = 0.0, py::arg("yaw_sigma") = 0.0,
           py::arg("height_sigma") = 0.0, py::arg("outlier_fraction") = 0.0, py::arg("outlier_scale") = 0.0,
           py::arg("seed") = 0)
      .def_readwrite("pixel_sigma", &NoiseModel::pixel_sigma)
      .def_readwrite("pitch_sigma", &NoiseModel::pitch_sigma)
      .def_readwrite("yaw_sigma", &NoiseModel::yaw_sigma)
      .def_readwrite("height_sigma", &NoiseModel::height_sigma)
      .def_readwrite("outlier_fraction", &NoiseModel::outlier_fraction)
      .def_readwrite("outlier_scale", &NoiseModel::outlier_scale)
      .def_readwrite("seed", &NoiseModel::seed);

  py::class_<SceneCamera>(m, "SceneCamera")
      .def(py::init([](const Camera& c, int w, int h) { return SceneCamera{c, w, h}; }), py::arg("camera"),
           py::arg("image_width"), py::arg("image_height"))
      .def_readwrite("camera", &SceneCamera::camera)
      .def_readwrite("image_width", &SceneCamera::image_width)
      .def_readwrite("image_height", &SceneCamera::image_height);

  py::class_<SceneSpec>(m, "SceneSpec")
      .def(py::init([](std::vector<SceneCamera> cameras, std::vector<PlanePoint> points, double extent_x,
                       double extent_y, int control_point_count) {
             SceneSpec s;
             s.cameras = std::move(cameras);
             s.extent_x = extent_x;
             s.extent_y = extent_y;
             s.control_point_count = control_point_count;
             if (!points.empty()) {
               s.layout = PointLayout::kExplicit;
               s.explicit_points = std::move(points);
             }
             s.validate();
             return s;
           }),
           py::arg("cameras"), py::arg("points") = std::vector<PlanePoint>{}, py::arg("extent_x") = 220.0,
           py::arg("extent_y") = 300.0, py::arg("control_point_count") = 8)
      .def_readwrite("cameras", &SceneSpec::cameras)
      .def_readwrite("explicit_points", &SceneSpec::explicit_points);

  m.def("camera_grid", &camera_grid, py::arg("rows"), py::arg("cols"), py::arg("extent_x"), py::arg("extent_y"),
        py::arg("height"), py::arg("pitch"), py::arg("intrinsics"), py::arg("image_width"),
        py::arg("image_height"));

  py::class_<ErrorReport>(m, "ErrorReport")
      .def_readonly("trials", &ErrorReport::trials)
      .def_readonly("failures", &ErrorReport::failures)
      .def_readonly("not_visible", &ErrorReport::not_visible)
      .def_property_readonly("abs_error", [](const ErrorReport& r) { return summary_dict(r.abs); })
      .def_property_readonly("rel_error", [](const ErrorReport& r) { return summary_dict(r.rel); })
      .def_property_readonly("errors", [](const ErrorReport& r) {
        Eigen::VectorXd e(r.points.size());
        for (std::size_t i = 0; i < r.points.size(); ++i) e[i] = r.points[i].abs_error;
        return e;
      });

  m.def(
      "evaluate_mono",
      [](const SceneSpec& s, const NoiseModel& n, int trials, int workers) {
        py::gil_scoped_release release;
        return evaluate_mono(s, n, trials, {workers});
      },
      py::arg("scene"), py::arg("noise"), py::arg("trials"), py::arg("workers") = 0);
  m.def(
      "evaluate_stereo",
      [](const SceneSpec& s, const NoiseModel& n, int trials, int workers) {
        py::gil_scoped_release release;
        StereoEvalOptions o;
        o.workers = workers;
        return evaluate_stereo(s, n, trials, o);
      },
      py::arg("scene"), py::arg("noise"), py::arg("trials"), py::arg("workers") = 0);

  // Mosaic bundle adjustment.
  py::class_<CorrespondenceGraph>(m, "CorrespondenceGraph")
      .def_property_readonly("image_count", [](const CorrespondenceGraph& g) { return g.images.size(); })
      .def_property_readonly("edge_count", [](const CorrespondenceGraph& g) { return g.edges.size(); })
      .def_property_readonly("control_count", [](const CorrespondenceGraph& g) { return g.controls.size(); });

  py::class_<HoldoutPoint>(m, "HoldoutPoint")
      .def_readonly("image_id", &HoldoutPoint::image_id)
      .def_readonly("pixel", &HoldoutPoint::pixel)
      .def_readonly("world", &HoldoutPoint::world);

  py::class_<SyntheticMosaic>(m, "SyntheticMosaic")
      .def_readonly("graph", &SyntheticMosaic::graph)
      .def_readonly("truth", &SyntheticMosaic::truth)
      .def_readonly("holdout", &SyntheticMosaic::holdout);

  m.def(
      "generate_ba_graph",
      [](const SceneSpec& s, const NoiseModel& n, int matches_per_edge, int holdout_count) {
        MosaicSimOptions o;
        o.matches_per_edge = matches_per_edge;
        o.holdout_count = holdout_count;
        return generate_ba_graph(s, n, o);
      },
      py::arg("scene"), py::arg("noise"), py::arg("matches_per_edge") = 30, py::arg("holdout_count") = 20);

  py::class_<BaSolution>(m, "BaSolution")
      .def_readonly("homographies", &BaSolution::homographies)
      .def_readonly("initial_cost", &BaSolution::initial_cost)
      .def_readonly("final_cost", &BaSolution::final_cost)
      .def_readonly("iterations", &BaSolution::iterations)
      .def_readonly("converged", &BaSolution::converged)
      .def_readonly("cost_trace", &BaSolution::cost_trace)
      .def_readonly("termination", &BaSolution::termination)
      .def("max_edge_rms", &BaSolution::max_edge_rms);

  m.def(
      "solve",
      [](const CorrespondenceGraph& g, std::optional<double> huber_delta, int max_iterations) {
        LmConfig c;
        c.max_iterations = max_iterations;
        if (huber_delta) {
          c.loss = LossKind::kHuber;
          c.huber_delta = *huber_delta;
        }
        c.validate();
        py::gil_scoped_release release;
        return solve(g, c);
      },
      py::arg("graph"), py::arg("huber_delta") = std::nullopt, py::arg("max_iterations") = 200);

  m.def(
      "evaluate",
      [](const BaSolution& s, const std::vector<HoldoutPoint>& holdout) {
        const HoldoutReport r = evaluate(s, holdout);
        py::dict d;
        d["errors"] = r.errors;
        d["rms"] = r.rms;
        d["max"] = r.max;
        return d;
      },
      py::arg("solution"), py::arg("holdout"));

  // Command line.
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"planar_measure"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out;
        std::ostringstream err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
