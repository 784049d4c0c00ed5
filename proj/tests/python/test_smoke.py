import math
import pathlib

import numpy as np
import pytest

import planar_metric as pm

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def hd_model(height=8.24, pitch_deg=1.679):
    intr = pm.CameraIntrinsics(1000.0, 1000.0, 960.0, 540.0)
    pose = pm.CameraPose(height, pm.deg(pitch_deg))
    return pm.MonoRangingModel(intr, pose)


def test_principal_point_distance():
    y = pm.longitudinal_distance(hd_model(), (960.0, 540.0))
    assert y == pytest.approx(281.109, abs=1e-3)


def test_locate_project_round_trip():
    model = hd_model(pitch_deg=20.0)
    q = pm.PlanePoint(3.5, 40.0)
    back = pm.locate(model, pm.project_to_pixel(model, q))
    assert math.hypot(back.x - q.x, back.y - q.y) < 1e-9


def test_ray_above_horizon_raises_with_code():
    with pytest.raises(pm.PlanarError) as info:
        pm.longitudinal_distance(hd_model(pitch_deg=1.0), (960.0, 1000.0))
    assert info.value.code == "RayAboveHorizon"


def test_sensitivity_sweep_identity():
    pitch, dist = pm.sensitivity_sweep(8.24, pm.deg(0.5), pm.deg(30.0), pm.deg(0.001))
    assert len(pitch) == 29501
    assert np.all(np.diff(dist) < 0)
    np.testing.assert_allclose(dist * np.tan(pitch), 8.24, rtol=1e-12)


def test_calibration_recovers_pitch_offset():
    intr = pm.CameraIntrinsics(500.0, 500.0, 320.0, 240.0)
    nominal = pm.CameraPose(12.0, pm.deg(75.0))
    truth = pm.MonoRangingModel(intr, nominal, pm.CalibrationCorrection(delta_pitch=pm.deg(0.3)))
    world = np.array([[x, y] for x in (-2.0, 0.0, 2.5) for y in (2.0, 3.5, 5.0)])
    pixels = np.array([list(pm.project_to_pixel(truth, tuple(w))) for w in world])
    fit = pm.fit_calibration(intr, nominal, pixels, world)
    assert pm.to_deg(fit.correction.delta_pitch) == pytest.approx(0.3, abs=1e-6)
    assert fit.rms < 1e-8


def test_dlt_exact_recovery():
    h = np.array([[1.1, 0.05, 20.0], [-0.03, 0.95, -10.0], [1e-4, -5e-5, 1.0]])
    src = np.array([[0.0, 0.0], [1000.0, 50.0], [900.0, 800.0], [80.0, 950.0], [500.0, 400.0]])
    dst = np.array([pm.Homography(h).apply(p) for p in src])
    est, report = pm.estimate_dlt(src, dst)
    expected = h / np.linalg.norm(h)
    got = est.matrix * np.sign(est.matrix[2, 2])
    np.testing.assert_allclose(got, expected, atol=1e-10)
    assert report["inlier_count"] == 5


def test_stereo_euclidean_fixture():
    intr = pm.CameraIntrinsics(1000.0, 1000.0, 960.0, 540.0)
    a = pm.Camera(intr, pm.CameraPose(10.0, pm.deg(5.0), 0.0, np.array([0.0, 0.0])))
    b = pm.Camera(intr, pm.CameraPose(10.0, pm.deg(5.0), 0.0, np.array([50.0, 0.0])))
    rig = pm.rig_from_cameras(a, b)
    target = (20.0, 60.0)
    s = pm.range_target(rig, pm.project_bearing(a, target), pm.project_bearing(b, target))
    assert s.dist_a == pytest.approx(math.sqrt(4000.0), rel=1e-9)
    assert s.dist_b == pytest.approx(math.sqrt(4500.0), rel=1e-9)


def test_mono_simulation_is_worker_independent():
    intr = pm.CameraIntrinsics(1000.0, 1000.0, 960.0, 540.0)
    pose = pm.CameraPose(8.24, pm.deg(30.0))
    y = 8.24 / math.tan(pm.deg(30.0))
    scene = pm.SceneSpec([pm.SceneCamera(pm.Camera(intr, pose), 1920, 1080)],
                         [pm.PlanePoint(0.0, y)])
    noise = pm.NoiseModel(pixel_sigma=1.0, pitch_sigma=pm.deg(0.1), seed=3)
    one = pm.evaluate_mono(scene, noise, 100, workers=1)
    many = pm.evaluate_mono(scene, noise, 100, workers=4)
    np.testing.assert_array_equal(one.errors, many.errors)
    assert one.abs_error["median"] < 1.0


def test_small_mosaic_solves():
    intr = pm.CameraIntrinsics(900.0, 900.0, 600.0, 450.0)
    cams = pm.camera_grid(2, 2, 55.0, 120.0, 50.0, pm.deg(55.0), intr, 1200, 900)
    scene = pm.SceneSpec(cams, extent_x=55.0, extent_y=120.0)
    mosaic = pm.generate_ba_graph(scene, pm.NoiseModel(pixel_sigma=0.2, seed=4))
    assert mosaic.graph.image_count == 4
    solution = pm.solve(mosaic.graph)
    assert solution.converged
    report = pm.evaluate(solution, mosaic.holdout)
    assert report["rms"] < 0.3


def test_cli_in_process():
    camera = DATA / "camera_anchor.json"
    code, out, err = pm.run_cli(["mono", "--camera", str(camera), "--pixel", "960,540"])
    assert code == 0, err
    assert "Y_m=281.1090" in out
    code, _, _ = pm.run_cli(["no-such-command"])
    assert code == 2
