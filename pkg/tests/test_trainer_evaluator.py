"""
Tests for training, evaluation and leave-one-out cross validation.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from src.core.errors import ContractError, DataError, UsageError
from src.core.evaluator import average_reports, evaluate, leave_one_out, make_predictor, predict_windows
from src.core.params import init_params
from src.core.trainer import scene_windows, train
from src.models.config import TrainConfig, load_run_config
from src.models.trajectory import Scene
from src.tools.data_collection.synthetic import ScenarioParams, synth_mixture, synth_scenario
from src.tools.processing.windowing import make_sequences


def test_scene_windows_are_centred(meeting_scene, quick_train_config):
    windows = scene_windows([meeting_scene], quick_train_config)
    assert len(windows) == 24 - 20 + 1
    for w in windows:
        np.testing.assert_allclose(w.positions_obs[:, 0].mean(axis=0), 0.0, atol=1e-12)


def test_training_is_deterministic(meeting_scene, following_scene, small_model_config, quick_train_config):
    first = train(quick_train_config, [meeting_scene, following_scene], small_model_config)
    second = train(quick_train_config, [meeting_scene, following_scene], small_model_config)
    assert first.loss_curve == second.loss_curve
    assert len(first.loss_curve) == quick_train_config.epochs
    for name, tensor in first.params.items():
        np.testing.assert_array_equal(tensor.data, second.params[name].data)


def test_zero_learning_rate_keeps_initial_parameters(meeting_scene, small_model_config):
    config = TrainConfig(epochs=1, batch_size=2, lr=0.0, seed=5)
    result = train(config, [meeting_scene], small_model_config)
    init_seq, _ = np.random.SeedSequence(5).spawn(2)
    initial = init_params(small_model_config, init_seq)
    for name, tensor in result.params.items():
        np.testing.assert_array_equal(tensor.data, initial[name].data)


def test_training_reports_every_epoch(meeting_scene, small_model_config, quick_train_config):
    seen = []
    result = train(quick_train_config, [meeting_scene], small_model_config,
                   on_epoch=lambda epoch, loss: seen.append((epoch, loss)))
    assert [e for e, _ in seen] == [1, 2]
    assert [loss for _, loss in seen] == result.loss_curve
    assert all(np.isfinite(result.loss_curve))
    csv = result.loss_csv().splitlines()
    assert csv[0] == "epoch,mean_loss"
    assert len(csv) == 3


def test_training_without_windows_fails(small_model_config, quick_train_config):
    short = Scene(name="empty")
    with pytest.raises(DataError):
        train(quick_train_config, [short], small_model_config)


def test_linear_predictor_is_exact_on_straight_walks(meeting_scene, following_scene, quick_train_config):
    report = evaluate([meeting_scene, following_scene], quick_train_config, predictor="linear")
    assert [row.scene for row in report.scenes] == ["following", "meeting"]
    assert report.aggregate.scene == "ALL"
    assert report.aggregate.n_sequences == 10
    assert report.aggregate.ade_m == pytest.approx(0.0, abs=1e-9)
    assert report.aggregate.fde_m == pytest.approx(0.0, abs=1e-9)
    assert "model" not in report.config


def test_gt_collision_counts_meeting(meeting_scene, quick_train_config):
    # the head-on walkers pass through each other at step 10
    report = evaluate([meeting_scene], quick_train_config, predictor="constant_velocity", gt_collision=True)
    assert report.aggregate.collision_pct > 0.0


def test_zero_collision_threshold_reports_no_collisions(meeting_scene, quick_train_config):
    # the walkers coincide exactly at step 10, still not strictly closer than 0
    report = evaluate([meeting_scene], quick_train_config, "linear", threshold=0.0, gt_collision=True)
    assert report.aggregate.collision_pct == 0.0
    assert [row.collision_pct for row in report.scenes] == [0.0]


def test_model_evaluation(meeting_scene, small_model_config, quick_train_config):
    params = train(quick_train_config, [meeting_scene], small_model_config).params
    report = evaluate([meeting_scene], quick_train_config, "model", params, small_model_config)
    assert report.predictor == "model"
    assert np.isfinite(report.aggregate.ade_m)
    assert report.aggregate.fde_m >= 0.0
    assert report.config["model"]["tcn_hidden"] == small_model_config.tcn_hidden


def test_parallel_prediction_keeps_order(meeting_scene, quick_train_config):
    windows = make_sequences(meeting_scene, 8, 12)
    predictor = make_predictor("linear", 12)
    serial = predict_windows(predictor, windows, workers=1)
    parallel = predict_windows(predictor, windows, workers=4)
    for a, b in zip(serial, parallel):
        assert a.window is b.window
        np.testing.assert_array_equal(a.pred, b.pred)


def test_predictor_validation():
    with pytest.raises(UsageError):
        make_predictor("oracle", 12)
    with pytest.raises(ContractError):
        make_predictor("model", 12)


def test_evaluation_without_windows_fails(quick_train_config):
    with pytest.raises(DataError):
        evaluate([Scene(name="empty")], quick_train_config, predictor="linear")


def test_leave_one_out_baseline(meeting_scene, following_scene, quick_train_config):
    folds = {"meeting": [meeting_scene], "following": [following_scene]}
    reports = leave_one_out(folds, quick_train_config, predictor="constant_velocity", gt_collision=True)
    assert [r.label for r in reports] == ["meeting", "following", "AVG"]
    avg = reports[-1]
    assert [row.scene for row in avg.scenes] == ["meeting", "following"]
    assert avg.aggregate.ade_m == pytest.approx(np.mean([r.aggregate.ade_m for r in reports[:2]]))
    assert avg.aggregate.collision_pct == pytest.approx(
        np.mean([r.aggregate.collision_pct for r in reports[:2]]))


def test_leave_one_out_trains_per_fold(meeting_scene, following_scene, small_model_config):
    config = TrainConfig(epochs=1, batch_size=8, lr=0.01)
    folds = {"meeting": [meeting_scene], "following": [following_scene]}
    reports = leave_one_out(folds, config, small_model_config)
    assert len(reports) == 3
    assert all(np.isfinite(r.aggregate.ade_m) for r in reports)


def test_leave_one_out_needs_two_folds(meeting_scene, quick_train_config):
    with pytest.raises(ContractError):
        leave_one_out({"only": [meeting_scene]}, quick_train_config, predictor="linear")


def test_average_reports_is_unweighted(meeting_scene, following_scene, quick_train_config):
    a = evaluate([meeting_scene], quick_train_config, "constant_velocity", label="a")
    b = evaluate([meeting_scene, following_scene], quick_train_config, "constant_velocity", label="b")
    avg = average_reports([a, b])
    assert avg.aggregate.n_sequences == a.aggregate.n_sequences + b.aggregate.n_sequences
    assert avg.aggregate.fde_m == pytest.approx((a.aggregate.fde_m + b.aggregate.fde_m) / 2)


@pytest.mark.slow
def test_smoke_training_learns_walks_and_beats_linear_on_arcs():
    run = load_run_config(Path(__file__).resolve().parents[1] / "config" / "training" / "smoke.json")
    scenario = ScenarioParams(n_frames=29)
    mixture = synth_mixture(["meeting", "following"], n_scenes=20, params=scenario, seed=0)
    result = train(run["training"], [mixture], run["model"])
    assert result.n_windows == 200
    assert len(result.loss_curve) == 200
    assert result.loss_curve[-1] < 0.05 * result.loss_curve[0]

    held_out = synth_mixture(["meeting", "following"], n_scenes=3, params=replace(scenario, jitter=0.05),
                             seed=7, name="held_out")
    model_ade = evaluate([held_out], run["training"], "model", result.params, run["model"]).aggregate.ade_m
    arcs = synth_scenario("arc", scenario, seed=0)
    linear_ade = evaluate([arcs], run["training"], "linear").aggregate.ade_m
    assert model_ade <= 0.8 * linear_ade
