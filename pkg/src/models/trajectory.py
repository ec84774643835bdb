"""
Trajectory data models

Scenes of time-stamped pedestrian positions and the fixed-length windows
cut from them for training and evaluation.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

DEFAULT_FRAME_INTERVAL = 0.4


class Observation(NamedTuple):
    """One pedestrian position at one frame, in meters."""
    frame_id: int
    ped_id: int
    x: float
    y: float


@dataclass
class Scene:
    """
    All observations of one recording.

    Observations are kept sorted by (frame_id, ped_id); each
    (frame_id, ped_id) pair occurs once.
    """
    name: str
    observations: List[Observation] = field(default_factory=list)
    frame_interval: float = DEFAULT_FRAME_INTERVAL

    def __len__(self) -> int:
        return len(self.observations)

    def is_empty(self) -> bool:
        return len(self.observations) == 0

    def frame_ids(self) -> List[int]:
        return sorted({obs.frame_id for obs in self.observations})

    def pedestrian_ids(self) -> List[int]:
        return sorted({obs.ped_id for obs in self.observations})

    def tracks(self) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
        """
        Per-pedestrian (frame_ids, positions[k × 2]) in frame order.
        """
        frames: Dict[int, List[int]] = {}
        points: Dict[int, List[Tuple[float, float]]] = {}
        for obs in self.observations:
            frames.setdefault(obs.ped_id, []).append(obs.frame_id)
            points.setdefault(obs.ped_id, []).append((obs.x, obs.y))
        return {
            ped: (np.asarray(frames[ped], dtype=np.int64), np.asarray(points[ped], dtype=np.float64))
            for ped in sorted(frames)
        }

    def frame_positions(self) -> List[Tuple[int, np.ndarray]]:
        """Positions of every pedestrian present, frame by frame."""
        grouped: Dict[int, List[Tuple[float, float]]] = {}
        for obs in self.observations:
            grouped.setdefault(obs.frame_id, []).append((obs.x, obs.y))
        return [(frame, np.asarray(grouped[frame], dtype=np.float64)) for frame in sorted(grouped)]


@dataclass(frozen=True)
class SequenceBatch:
    """
    One observation/prediction window of a scene.

    Attributes:
        positions_obs: [N × T_obs × 2] meters
        positions_gt: [N × T_pred × 2] meters
        node_mask: [N] booleans (True = pedestrian present over the whole window)
        ped_ids: [N] pedestrian ids
        origin: (x, y) subtracted by normalize(); zeros for world coordinates
        scene_name: Recording the window was cut from
        start_frame: Re-indexed time step where the window starts
    """
    positions_obs: np.ndarray
    positions_gt: np.ndarray
    node_mask: np.ndarray
    ped_ids: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(2))
    scene_name: str = ""
    start_frame: int = 0

    @property
    def n_nodes(self) -> int:
        return int(self.positions_obs.shape[0])

    @property
    def t_obs(self) -> int:
        return int(self.positions_obs.shape[1])

    @property
    def t_pred(self) -> int:
        return int(self.positions_gt.shape[1])

    def positions(self) -> np.ndarray:
        """Observed and future positions [N × (T_obs + T_pred) × 2]."""
        return np.concatenate([self.positions_obs, self.positions_gt], axis=1)

    def shifted(self, offset: np.ndarray) -> "SequenceBatch":
        """Subtract ``offset`` from every position and add it to the origin."""
        offset = np.asarray(offset, dtype=np.float64)
        return replace(
            self,
            positions_obs=self.positions_obs - offset,
            positions_gt=self.positions_gt - offset,
            origin=self.origin + offset,
        )

    def to_dict(self) -> Dict:
        return {
            "scene_name": self.scene_name,
            "start_frame": self.start_frame,
            "ped_ids": [int(p) for p in self.ped_ids],
            "node_mask": [bool(m) for m in self.node_mask],
            "origin": [float(v) for v in self.origin],
            "positions_obs": self.positions_obs.tolist(),
            "positions_gt": self.positions_gt.tolist(),
        }
