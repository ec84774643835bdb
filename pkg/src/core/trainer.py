"""
Trainer

Mini-batch SGD over normalised windows of the training scenes.

Determinism: one SeedSequence(seed) is split into an initialisation stream
and a shuffling stream, so the same config and data give bit-identical
parameters and loss curves.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.core.errors import DataError, NumericalError
from src.core.losses import total_loss
from src.core.model import TrajectoryForecaster
from src.core.optimizer import sgd_step
from src.core.params import ModelParams
from src.core.tensor import Tape
from src.models.config import ModelConfig, TrainConfig
from src.models.trajectory import Scene, SequenceBatch
from src.tools.processing.batching import ModelBatch, WindowGraphs, iterate_batches, prepare_windows
from src.tools.processing.windowing import make_sequences, normalize

logger = logging.getLogger(__name__)

EpochCallback = Callable[[int, float], None]


@dataclass
class TrainResult:
    params: ModelParams
    loss_curve: List[float] = field(default_factory=list)
    n_windows: int = 0
    model_config: Optional[ModelConfig] = None
    train_config: Optional[TrainConfig] = None

    def loss_csv(self) -> str:
        lines = ["epoch,mean_loss"]
        lines.extend(f"{epoch},{loss:.10f}" for epoch, loss in enumerate(self.loss_curve, start=1))
        return "\n".join(lines) + "\n"


def scene_windows(scenes: Sequence[Scene], config: TrainConfig) -> List[SequenceBatch]:
    """Normalised windows of every scene, in scene order."""
    windows: List[SequenceBatch] = []
    for scene in scenes:
        cut = make_sequences(scene, config.t_obs, config.t_pred, config.stride)
        windows.extend(normalize(w) for w in cut)
        logger.debug(f"Scene {scene.name}: {len(cut)} windows")
    return windows


def batch_loss(model: TrajectoryForecaster, params: ModelParams, batch: ModelBatch, config: TrainConfig):
    """Forward pass and loss terms of one batch (must run under a Tape)."""
    mode = "teacher_forcing" if config.teacher_forcing else "free_running"
    out = model.forward(params, batch.obs, batch.a_norm, batch.node_mask, config.t_pred,
                        mode=mode, ground_truth=batch.gt)
    return total_loss(out.pred, batch.gt, batch.node_mask, out.spatial, batch.adjacency, config.lambda_recon)


def train_epoch(model: TrajectoryForecaster, params: ModelParams, items: Sequence[WindowGraphs],
                config: TrainConfig, lr: float, rng: np.random.Generator, epoch: int):
    """One pass over shuffled windows. Returns (params, window-weighted mean loss)."""
    order = rng.permutation(len(items))
    weighted, seen = 0.0, 0
    for index, batch in enumerate(iterate_batches(items, config.batch_size, order)):
        with Tape() as tape:
            terms = batch_loss(model, params, batch, config)
            loss = terms.total.item()
            if not np.isfinite(loss):
                raise NumericalError("non-finite training loss",
                                     {"epoch": epoch, "batch": index, "l2": terms.l2, "recon": terms.recon})
            grads = tape.backward(terms.total)
        params, norm = sgd_step(params, grads, lr, config.grad_clip_norm)
        weighted += loss * batch.size
        seen += batch.size
        logger.debug(f"epoch {epoch} batch {index}: loss={loss:.6f} l2={terms.l2:.6f} "
                     f"recon={terms.recon:.6f} grad_norm={norm:.4f}")
    return params, weighted / seen


def train(config: TrainConfig, scenes: Sequence[Scene], model_config: Optional[ModelConfig] = None,
          on_epoch: Optional[EpochCallback] = None) -> TrainResult:
    """
    Train a forecaster from scratch.

    Args:
        config: Optimisation and windowing settings
        scenes: Training recordings
        model_config: Layer widths (defaults)
        on_epoch: Called with (epoch, mean loss) after every epoch

    Raises:
        DataError: No scene yields a complete window
        NumericalError: A loss or gradient becomes NaN/Inf
    """
    model_config = model_config or ModelConfig()
    windows = scene_windows(scenes, config)
    if not windows:
        raise DataError(
            f"No training windows of {config.t_obs + config.t_pred} steps in {len(scenes)} scene(s)"
        )
    items = prepare_windows(windows, model_config.radius)

    init_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    model = TrajectoryForecaster(model_config)
    params = model.init_params(init_seq)
    rng = np.random.default_rng(shuffle_seq)

    logger.info(f"Training on {len(windows)} windows from {len(scenes)} scene(s): "
                f"{params.num_parameters} parameters, {config.epochs} epochs, batch {config.batch_size}")

    curve: List[float] = []
    for epoch in range(1, config.epochs + 1):
        lr = config.learning_rate(epoch)
        params, mean_loss = train_epoch(model, params, items, config, lr, rng, epoch)
        curve.append(mean_loss)
        logger.info(f"Epoch {epoch}/{config.epochs}: mean loss {mean_loss:.6f} (lr {lr:g})")
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)

    return TrainResult(params=params, loss_curve=curve, n_windows=len(windows),
                       model_config=model_config, train_config=config)
