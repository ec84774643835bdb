"""
Evaluation Metrics

Displacement errors in meters and the collision rate of a set of frames.

    ADE  mean Euclidean distance over all predicted steps
    FDE  Euclidean distance at the final step
    collision  per frame, percentage of present pedestrians with another
               pedestrian strictly closer than the threshold
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from src.core.errors import ContractError, DimensionError
from src.models.trajectory import Scene

logger = logging.getLogger(__name__)

COLLISION_THRESHOLD = 0.10
SAMPLE_AGENTS = 30
SAMPLE_HORIZON_S = 8.0


def _distances(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.shape[-1] != 2:
        raise DimensionError(f"prediction {pred.shape} and ground truth {gt.shape} must match as [..., T, 2]")
    return np.linalg.norm(pred - gt, axis=-1)


def per_agent_ade(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """[... × T × 2] -> [...] mean displacement per trajectory."""
    return _distances(pred, gt).mean(axis=-1)


def per_agent_fde(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """[... × T × 2] -> [...] final-step displacement per trajectory."""
    return _distances(pred, gt)[..., -1]


def ade(pred: np.ndarray, gt: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """Average displacement error over (masked) trajectories."""
    per_agent = per_agent_ade(pred, gt)
    if mask is not None:
        per_agent = per_agent[np.asarray(mask, dtype=bool)]
    if per_agent.size == 0:
        raise ContractError("ADE of an empty set of trajectories")
    return float(per_agent.mean())


def fde(pred: np.ndarray, gt: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """Final displacement error over (masked) trajectories."""
    per_agent = per_agent_fde(pred, gt)
    if mask is not None:
        per_agent = per_agent[np.asarray(mask, dtype=bool)]
    if per_agent.size == 0:
        raise ContractError("FDE of an empty set of trajectories")
    return float(per_agent.mean())


def colliding_count(positions: np.ndarray, threshold: float = COLLISION_THRESHOLD) -> int:
    """Pedestrians of one frame [n × 2] with a neighbour strictly closer than threshold."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if positions.shape[0] < 2:
        return 0
    dist = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    np.fill_diagonal(dist, np.inf)
    return int(np.sum(dist.min(axis=1) < threshold))


def frame_collision_pct(positions: np.ndarray, threshold: float = COLLISION_THRESHOLD) -> float:
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if positions.shape[0] < 2:
        return 0.0
    return 100.0 * colliding_count(positions, threshold) / positions.shape[0]


def collision_rate(frames: Sequence[np.ndarray], threshold: float = COLLISION_THRESHOLD) -> float:
    """
    Mean per-frame collision percentage.

    Frames with fewer than two pedestrians count as 0%; no frames gives 0.
    A zero threshold never collides since the comparison is strict.
    """
    if threshold < 0:
        raise ContractError(f"collision threshold must be non-negative, got {threshold}")
    if len(frames) == 0:
        return 0.0
    return float(np.mean([frame_collision_pct(f, threshold) for f in frames]))


def window_frames(positions: np.ndarray, mask: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """Split [N × T × 2] trajectories into T frames of the masked-in pedestrians."""
    positions = np.asarray(positions, dtype=np.float64)
    if mask is not None:
        positions = positions[np.asarray(mask, dtype=bool)]
    return [positions[:, t] for t in range(positions.shape[1])]


def scene_collision_rate(scene: Scene, threshold: float = COLLISION_THRESHOLD) -> float:
    """Collision rate of a whole recording, every frame counted."""
    return collision_rate([pos for _, pos in scene.frame_positions()], threshold)


def sampled_collision_rate(
    scene: Scene,
    threshold: float = COLLISION_THRESHOLD,
    sample_agents: int = SAMPLE_AGENTS,
    horizon_s: float = SAMPLE_HORIZON_S,
    n_samples: int = 10,
    seed: int = 0,
) -> float:
    """
    Collision rate under the sampled-agent protocol.

    Each sample draws up to ``sample_agents`` pedestrians; every drawn
    pedestrian contributes only the first ``horizon_s`` seconds of its track.
    Frames are built from the contributing positions and the per-sample rates
    are averaged.
    """
    if sample_agents < 2:
        raise ContractError(f"sample_agents must be >= 2, got {sample_agents}")
    tracks = scene.tracks()
    if not tracks:
        return 0.0
    ids = np.asarray(sorted(tracks), dtype=np.int64)
    horizon_frames = max(1, int(round(horizon_s / scene.frame_interval)))
    rng = np.random.default_rng(seed)

    rates = []
    for _ in range(n_samples):
        chosen = rng.choice(ids, size=min(sample_agents, ids.size), replace=False)
        by_frame = {}
        for ped in chosen:
            frames, xy = tracks[int(ped)]
            for frame, point in zip(frames[:horizon_frames], xy[:horizon_frames]):
                by_frame.setdefault(int(frame), []).append(point)
        rates.append(collision_rate([np.asarray(by_frame[f]) for f in sorted(by_frame)], threshold))
    return float(np.mean(rates))
