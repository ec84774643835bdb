"""
Windowing and Normalisation

Cuts scenes into observation/prediction windows and re-centres them.

Frames are re-indexed to consecutive steps: raw ETH/UCY frame ids advance
by a constant stride (10 video frames per 0.4 s sample), which is detected
as the GCD of the distinct frame-id gaps.
"""

import json
import logging
from math import gcd
from functools import reduce
from typing import List, Tuple

import numpy as np

from src.core.errors import ContractError
from src.models.trajectory import Scene, SequenceBatch

logger = logging.getLogger(__name__)


def frame_stride(frame_ids: List[int]) -> int:
    """Constant frame step of a scene (1 for fewer than two frames)."""
    if len(frame_ids) < 2:
        return 1
    gaps = np.diff(np.asarray(sorted(set(frame_ids)), dtype=np.int64))
    return int(reduce(gcd, (int(g) for g in gaps)))


def scene_grid(scene: Scene) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Dense view of a scene on re-indexed time steps.

    Returns:
        (ped_ids[P], present[P × S] bool, positions[P × S × 2] with NaN where absent)
    """
    frames = scene.frame_ids()
    ped_ids = np.asarray(scene.pedestrian_ids(), dtype=np.int64)
    if not frames:
        return ped_ids, np.zeros((0, 0), dtype=bool), np.zeros((0, 0, 2))

    stride = frame_stride(frames)
    first = frames[0]
    n_steps = (frames[-1] - first) // stride + 1
    row = {int(p): i for i, p in enumerate(ped_ids)}

    present = np.zeros((len(ped_ids), n_steps), dtype=bool)
    positions = np.full((len(ped_ids), n_steps, 2), np.nan)
    for obs in scene.observations:
        step = (obs.frame_id - first) // stride
        present[row[obs.ped_id], step] = True
        positions[row[obs.ped_id], step] = (obs.x, obs.y)
    return ped_ids, present, positions


def make_sequences(scene: Scene, t_obs: int = 8, t_pred: int = 12, stride: int = 1) -> List[SequenceBatch]:
    """
    Slide a window of t_obs + t_pred consecutive steps over a scene.

    A pedestrian joins a window only if present at every step of it;
    windows without any such pedestrian are dropped.

    Args:
        scene: Source recording
        t_obs: Observed steps
        t_pred: Predicted steps
        stride: Steps between window starts

    Returns:
        Windows in world coordinates, in start order
    """
    if t_obs < 1 or t_pred < 1 or stride < 1:
        raise ContractError(f"t_obs, t_pred and stride must be >= 1, got {t_obs}, {t_pred}, {stride}")

    ped_ids, present, positions = scene_grid(scene)
    length = t_obs + t_pred
    n_steps = present.shape[1]
    if n_steps < length:
        return []

    # complete[p, s] == present over steps s .. s+length-1
    counts = np.concatenate([np.zeros((present.shape[0], 1), dtype=np.int64), np.cumsum(present, axis=1)], axis=1)
    complete = (counts[:, length:] - counts[:, :-length]) == length

    windows = []
    for start in range(0, n_steps - length + 1, stride):
        rows = np.flatnonzero(complete[:, start])
        if rows.size == 0:
            continue
        chunk = positions[rows, start:start + length]
        windows.append(SequenceBatch(
            positions_obs=chunk[:, :t_obs].copy(),
            positions_gt=chunk[:, t_obs:].copy(),
            node_mask=np.ones(rows.size, dtype=bool),
            ped_ids=ped_ids[rows].copy(),
            origin=np.zeros(2),
            scene_name=scene.name,
            start_frame=start,
        ))

    logger.debug(f"Scene {scene.name}: {len(windows)} windows of {length} steps (stride {stride})")
    return windows


def normalize(batch: SequenceBatch) -> SequenceBatch:
    """
    Centre a window on the centroid of its pedestrians at the first observed step.

    The subtracted offset is accumulated in ``origin`` so denormalize() restores
    world coordinates.
    """
    mask = np.asarray(batch.node_mask, dtype=bool)
    if not mask.any():
        raise ContractError(f"Window of {batch.scene_name} has no pedestrians to normalise")
    centroid = batch.positions_obs[mask, 0].mean(axis=0)
    return batch.shifted(centroid)


def denormalize(batch: SequenceBatch) -> SequenceBatch:
    """Return a window to world coordinates (origin zero)."""
    return batch.shifted(-batch.origin)


def batch_to_json(batch: SequenceBatch) -> str:
    """Debug dump of a window as JSON arrays."""
    return json.dumps(batch.to_dict(), indent=2)
