#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "planar/geometry.h"
#include "planar/homography.h"
#include "planar/lm.h"
#include "planar/mono_ranging.h"
#include "planar/mosaic_ba.h"
#include "planar/sim_harness.h"
#include "planar/stereo_ranging.h"

namespace planar::io {

// All readers throw ParseError on malformed input, UnknownField on keys that
// are not part of the format and IoError when a file cannot be opened.
// Angles are degrees in files, radians in memory.

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
nlohmann::json read_json(const std::string& path);

// Camera config: fx, fy, u0, v0, pixel_aspect?, height_m, pitch_deg,
// yaw_deg?, position_m?.
Camera camera_from_json(const nlohmann::json& j);
nlohmann::json camera_to_json(const Camera& camera);
Camera read_camera(const std::string& path);

// Either an inline object or a path string resolved against base_dir.
Camera camera_ref_from_json(const nlohmann::json& j, const std::string& base_dir);

// Corrections: delta_pitch_deg, delta_u0_px, delta_v0_px, delta_height_m?,
// rms_m?.
CalibrationCorrection correction_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const CalibrationResult& result, bool with_height);
CalibrationCorrection read_correction(const std::string& path);

// CSV with header u,v,X,Y.
std::vector<ControlObservation> read_controls_csv(const std::string& path);
// CSV with header image_id,u,v,X,Y.
std::vector<HoldoutPoint> read_holdout_csv(const std::string& path);
std::string holdout_to_csv(const std::vector<HoldoutPoint>& holdout);

// CSV alpha_deg,Y_m with six decimals.
std::string sensitivity_to_csv(const SensitivityCurve& curve);

// {"h": [9 row-major], "frame_src": ..., "frame_dst": ...}
nlohmann::json homography_to_json(const Homography& h, const std::string& frame_src,
                                  const std::string& frame_dst);
Homography homography_from_json(const nlohmann::json& j);

CorrespondenceGraph graph_from_json(const nlohmann::json& j, const std::string& base_dir);
nlohmann::json graph_to_json(const CorrespondenceGraph& graph);
CorrespondenceGraph read_graph(const std::string& path);

nlohmann::json solution_to_json(const BaSolution& solution);
BaSolution solution_from_json(const nlohmann::json& j);

LmConfig lm_config_from_json(const nlohmann::json& j);

// Rig: camera_a, camera_b (path or inline), baseline_m, baseline_azimuth_deg.
StereoRig rig_from_json(const nlohmann::json& j, const std::string& base_dir);
StereoRig read_rig(const std::string& path);

// Noise: pixel_sigma_px, pitch_sigma_deg, yaw_sigma_deg, height_sigma_m,
// outlier_fraction, outlier_scale_px, seed.
NoiseModel noise_from_json(const nlohmann::json& j);
nlohmann::json noise_to_json(const NoiseModel& noise);

// Scene: extent_m [x, y], layout {"grid": [nx, ny]} | {"random": n} |
// {"points": [[x, y], ...]}, cameras (list of camera objects with optional
// image_size [w, h]) or camera_grid {rows, cols, height_m, pitch_deg,
// intrinsics, image_size}, control_point_count.
SceneSpec scene_from_json(const nlohmann::json& j, const std::string& base_dir);
SceneSpec read_scene(const std::string& path);

std::string error_report_csv(const ErrorReport& report);
nlohmann::json error_summary_json(const ErrorReport& report);
nlohmann::json observations_to_json(const ObservationSet& set);

std::string parent_dir(const std::string& path);

}  // namespace planar::io
