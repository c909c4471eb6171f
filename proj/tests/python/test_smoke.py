import json

import numpy as np
import pytest

import birdpose as bp


def test_model_and_kinematics():
    model = bp.default_bird_model()
    assert model.num_keypoints == len(model.keypoint_names)
    assert model.parents[0] == -1
    pose = bp.PoseParams.rest(model)
    kin = bp.forward_kinematics(model, pose)
    assert kin.joints.shape == (model.num_joints, 3)
    px = bp.project(bp.Camera(), kin.keypoints)
    assert px.shape == (model.num_keypoints, 2)
    again = bp.model_from_json(model.to_json())
    assert again.num_joints == model.num_joints


def test_pose_round_trip():
    model = bp.default_bird_model()
    pose = bp.PoseParams.rest(model)
    pose.sigma = 1.3
    pose.kappa = np.array([0.1, -0.2])
    flat = pose.flatten()
    assert flat[2] == pytest.approx(1.3)
    assert bp.PoseParams.unflatten(flat) == pose


def test_silhouette_is_bounded_and_centred():
    model = bp.default_bird_model()
    sil = bp.render_soft_silhouette(model, bp.PoseParams.rest(model))
    assert sil.shape == (256, 256)
    assert sil.min() >= 0.0 and sil.max() <= 1.0
    assert sil[128, 128] > 0.5
    assert sil[0, 0] == 0.0


def test_fit_recovers_synthetic_bird():
    model = bp.default_bird_model()
    cfg = bp.SynthConfig()
    cfg.frames = 3
    cfg.motion.keypoint_noise = 0.0
    cfg.motion.outlier_probability = 0.0
    data = bp.synthetic_dataset(model, cfg, 7)
    assert len(data.tracks) == 1 and len(data.tracks[0].observations) == 3

    fit_cfg = bp.FitConfig()
    fit_cfg.window_size = 3
    fit_cfg.stage1_iters = 150
    fit_cfg.stage2_iters = 50
    fits = bp.fit_dataset(model, bp.Camera(), data, fit_cfg)
    w = fits[0].fit.windows[0]
    assert w.final_loss <= w.initial_loss
    report = bp.evaluate_dataset(data, fits)
    assert 0.0 <= report.me_p < 0.2


def test_errors_carry_kind_and_field():
    cfg = bp.FitConfig()
    cfg.window_size = 0
    with pytest.raises(bp.BirdposeError) as info:
        cfg.validate()
    assert info.value.kind == "validation"
    assert info.value.field == "window_size"
    with pytest.raises(bp.BirdposeError) as info:
        bp.config_from_json(json.dumps({"fit": {"windw": 3}}))
    assert info.value.kind == "parse" and info.value.field == "fit.windw"
    with pytest.raises(ValueError):
        bp.load_model("/nonexistent/model.json")


def test_grid_and_config():
    cells = bp.enumerate_grid(bp.standard_grid())
    assert len(cells) == 66
    spec = bp.grid_from_json('{"blocks": [{"window": [1, 10], "lambda_vel": [0, 100]}]}')
    assert [c.window_size for c in bp.enumerate_grid(spec)] == [1, 1, 10, 10]
    app = bp.config_from_json('{"fit": {"window_size": 12}}')
    assert app.fit.window_size == 12
    assert json.loads(app.to_json())["fit"]["window_size"] == 12


def test_crop_and_tracking():
    mask = np.zeros((200, 300), dtype=np.uint8)
    mask[50:90, 100:180] = 1
    box = bp.mask_bbox(mask)
    assert (box.x0, box.y0, box.x1, box.y1) == (100, 50, 180, 90)
    kp = np.array([[140.0, 70.0, 0.9]] * 20)
    obs = bp.normalize_crop(box, mask, kp, frame_index=3)
    assert obs.mask.shape == (256, 256)
    np.testing.assert_allclose(obs.crop.apply(np.array([140.0, 70.0])), obs.keypoints[0, :2])

    tracker = bp.Tracker()
    tracker.associate(0, [bp.BBox(0, 0, 10, 10)])
    step = tracker.associate(1, [bp.BBox(1, 0, 11, 10)])
    assert step["updated"] == [0]
    assert len(tracker.tracks[0].entries) == 2


def test_overlay_maps_keypoints_through_crop():
    model = bp.default_bird_model()
    obs = bp.ObservationFrame()
    obs.keypoints = np.zeros((model.num_keypoints, 3))
    obs.crop.scale = 2.0
    obs.crop.offset = np.array([-40.0, -60.0])
    pose = bp.PoseParams.rest(model)
    image = np.zeros((200, 200, 3), dtype=np.uint8)
    out, kp = bp.draw_fitted_bird(image, model, bp.Camera(), obs, pose, track_id=1)
    crop_kp = bp.project(bp.Camera(), bp.forward_kinematics(model, pose).keypoints)
    np.testing.assert_allclose(kp, (crop_kp - obs.crop.offset) / 2.0)
    assert out.any() and not image.any()
