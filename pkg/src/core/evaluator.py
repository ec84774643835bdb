"""
Evaluator

Runs a predictor over every window of a set of scenes and reports ADE/FDE
(meters, world frame) and collision rate per scene. Windows are independent,
so inference fans out over a thread pool; results are merged by scene name
in input order.

Predictors:
    model              trained forecaster (free-running, no tape)
    linear             per-coordinate least squares vs time
    constant_velocity  repeat the last displacement
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from src.core.baselines import constant_velocity_baseline, linear_baseline
from src.core.errors import ContractError, DataError, UsageError
from src.core.metrics import (
    COLLISION_THRESHOLD,
    collision_rate,
    per_agent_ade,
    per_agent_fde,
    sampled_collision_rate,
    window_frames,
)
from src.core.model import TrajectoryForecaster
from src.core.params import ModelParams
from src.core.trainer import train
from src.models.config import ModelConfig, TrainConfig
from src.models.reports import EvalReport, SceneMetrics
from src.models.trajectory import Scene, SequenceBatch
from src.tools.processing.batching import collate, window_graphs
from src.tools.processing.windowing import make_sequences, normalize

logger = logging.getLogger(__name__)

PREDICTORS = ("model", "linear", "constant_velocity")

WindowPredictor = Callable[[SequenceBatch], np.ndarray]


@dataclass
class WindowResult:
    """World-frame prediction of one window."""
    window: SequenceBatch
    pred: np.ndarray

    @property
    def gt(self) -> np.ndarray:
        return self.window.positions_gt


def model_predictor(params: ModelParams, model_config: ModelConfig, t_pred: int) -> WindowPredictor:
    """Window -> world-frame prediction with the forecaster."""
    model = TrajectoryForecaster(model_config)
    model.check(params)

    def predict(window: SequenceBatch) -> np.ndarray:
        local = normalize(window)
        batch = collate([window_graphs(local, model_config.radius)])
        pred = model.predict(params, batch.obs, batch.a_norm, batch.node_mask, t_pred)[0]
        return pred + local.origin

    return predict


def baseline_predictor(name: str, t_pred: int) -> WindowPredictor:
    fn = linear_baseline if name == "linear" else constant_velocity_baseline
    return lambda window: fn(window.positions_obs, t_pred)


def make_predictor(name: str, t_pred: int, params: Optional[ModelParams] = None,
                   model_config: Optional[ModelConfig] = None) -> WindowPredictor:
    if name not in PREDICTORS:
        raise UsageError(f"Unknown predictor '{name}', expected one of {', '.join(PREDICTORS)}")
    if name == "model":
        if params is None:
            raise ContractError("model predictor needs trained parameters")
        return model_predictor(params, model_config or ModelConfig(), t_pred)
    return baseline_predictor(name, t_pred)


def predict_windows(predictor: WindowPredictor, windows: Sequence[SequenceBatch],
                    workers: int = 4) -> List[WindowResult]:
    """Predict every window; order of the results matches the input."""
    if workers <= 1 or len(windows) <= 1:
        preds = [predictor(w) for w in windows]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            preds = list(pool.map(predictor, windows))
    return [WindowResult(window=w, pred=p) for w, p in zip(windows, preds)]


def _subsample(positions: np.ndarray, limit: Optional[int], rng: np.random.Generator) -> np.ndarray:
    if limit is None or positions.shape[0] <= limit:
        return positions
    return positions[np.sort(rng.choice(positions.shape[0], size=limit, replace=False))]


def scene_metrics(
    name: str,
    results: Sequence[WindowResult],
    threshold: float = COLLISION_THRESHOLD,
    gt_collision: bool = False,
    sample_agents: Optional[int] = None,
    seed: int = 0,
) -> SceneMetrics:
    """
    Pool per-pedestrian errors of all windows of one scene.

    Collision frames are the predicted steps of every window (ground truth
    instead with ``gt_collision``), optionally restricted to a seeded random
    subset of ``sample_agents`` pedestrians per window.
    """
    ade_values, fde_values, frames = [], [], []
    rng = np.random.default_rng(seed)
    for result in results:
        mask = np.asarray(result.window.node_mask, dtype=bool)
        ade_values.append(per_agent_ade(result.pred, result.gt)[mask])
        fde_values.append(per_agent_fde(result.pred, result.gt)[mask])
        source = result.gt if gt_collision else result.pred
        frames.extend(window_frames(_subsample(source[mask], sample_agents, rng)))
    ade_all = np.concatenate(ade_values)
    fde_all = np.concatenate(fde_values)
    return SceneMetrics(
        scene=name,
        n_sequences=len(results),
        ade_m=float(ade_all.mean()),
        fde_m=float(fde_all.mean()),
        collision_pct=collision_rate(frames, threshold),
    )


def evaluate(
    scenes: Sequence[Scene],
    config: TrainConfig,
    predictor: str = "model",
    params: Optional[ModelParams] = None,
    model_config: Optional[ModelConfig] = None,
    threshold: float = COLLISION_THRESHOLD,
    gt_collision: bool = False,
    sample_agents: Optional[int] = None,
    label: str = "",
) -> EvalReport:
    """
    Evaluate a predictor on every complete window of the scenes.

    Scenes sharing a name are merged into one row. The aggregate row pools
    every pedestrian-window; its collision rate pools every frame.

    Raises:
        DataError: No scene yields a complete window
        UsageError: Unknown predictor
    """
    window_predictor = make_predictor(predictor, config.t_pred, params, model_config)

    grouped: Dict[str, List[SequenceBatch]] = {}
    for scene in scenes:
        windows = make_sequences(scene, config.t_obs, config.t_pred, config.stride)
        if not windows:
            logger.warning(f"Scene {scene.name} has no complete {config.t_obs + config.t_pred}-step window")
            continue
        grouped.setdefault(scene.name, []).extend(windows)
    if not grouped:
        raise DataError(f"No evaluation windows in {len(scenes)} scene(s)")

    rows: List[SceneMetrics] = []
    pooled: List[WindowResult] = []
    for name, windows in grouped.items():
        results = predict_windows(window_predictor, windows, config.eval_workers)
        pooled.extend(results)
        row = scene_metrics(name, results, threshold, gt_collision, sample_agents, config.seed)
        if gt_collision and sample_agents is not None:
            merged = [s for s in scenes if s.name == name]
            row.collision_pct = float(np.mean([
                sampled_collision_rate(s, threshold, sample_agents, seed=config.seed) for s in merged
            ]))
        logger.info(f"{predictor} on {name}: ADE {row.ade_m:.3f} m, FDE {row.fde_m:.3f} m, "
                    f"collisions {row.collision_pct:.2f}% over {row.n_sequences} windows")
        rows.append(row)

    aggregate = scene_metrics("ALL", pooled, threshold, gt_collision, sample_agents, config.seed)
    if gt_collision and sample_agents is not None:
        aggregate.collision_pct = float(np.mean([r.collision_pct for r in rows]))

    snapshot = {"training": config.model_dump()}
    if predictor == "model":
        snapshot["model"] = (model_config or ModelConfig()).model_dump()
    return EvalReport(
        scenes=sorted(rows, key=lambda r: r.scene),
        aggregate=aggregate,
        config=snapshot,
        seed=config.seed,
        predictor=predictor,
        label=label,
    )


def average_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Unweighted mean of fold aggregates; one row per fold."""
    rows = [
        SceneMetrics(r.label, r.aggregate.n_sequences, r.aggregate.ade_m, r.aggregate.fde_m, r.aggregate.collision_pct)
        for r in reports
    ]
    avg = SceneMetrics(
        scene="AVG",
        n_sequences=int(sum(r.n_sequences for r in rows)),
        ade_m=float(np.mean([r.ade_m for r in rows])),
        fde_m=float(np.mean([r.fde_m for r in rows])),
        collision_pct=float(np.mean([r.collision_pct for r in rows])),
    )
    first = reports[0]
    return EvalReport(scenes=rows, aggregate=avg, config=first.config, seed=first.seed,
                      predictor=first.predictor, label="AVG")


def leave_one_out(
    folds: Mapping[str, Sequence[Scene]],
    config: TrainConfig,
    model_config: Optional[ModelConfig] = None,
    predictor: str = "model",
    **eval_options,
) -> List[EvalReport]:
    """
    Train on all folds but one, evaluate on the held-out fold, for every fold.

    Baseline predictors skip training. Returns one report per fold (in
    mapping order) followed by the AVG report.

    Raises:
        ContractError: Fewer than two folds
    """
    if len(folds) < 2:
        raise ContractError(f"leave-one-out needs at least 2 folds, got {len(folds)}")
    model_config = model_config or ModelConfig()

    reports: List[EvalReport] = []
    for held_out, test_scenes in folds.items():
        params = None
        if predictor == "model":
            train_scenes = [s for name, group in folds.items() if name != held_out for s in group]
            logger.info(f"Fold {held_out}: training on {len(train_scenes)} scene(s)")
            params = train(config, train_scenes, model_config).params
        report = evaluate(test_scenes, config, predictor, params, model_config, label=held_out, **eval_options)
        reports.append(report)

    reports.append(average_reports(reports))
    return reports
