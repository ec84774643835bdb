"""
Synthetic Social Scenarios

Deterministic generators for the classic pedestrian interaction set-ups:

    following    two walkers on one line, same direction, constant gap
    meeting      two walkers head-on
    group_avoid  one walker head-on against a three-walker group
    merge        a walker from a side branch joining another's path
    angle_cross  two walkers crossing at a configurable angle
    arc          two walkers on circular arcs (curved motion)

All scenes are sampled every 0.4 s; frame ids advance by ``frame_step``
(10, like the raw recordings). Gaussian position noise and a relative
speed/offset jitter are drawn from ``numpy.random.default_rng(seed)``.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from src.core.errors import UsageError
from src.models.trajectory import DEFAULT_FRAME_INTERVAL, Observation, Scene

logger = logging.getLogger(__name__)

SCENARIO_KINDS = ("following", "meeting", "group_avoid", "merge", "angle_cross", "arc")
MIN_FRAMES = 20

# Initial spacing (meters) when ScenarioParams.separation is None
DEFAULT_SEPARATION = {
    "following": 1.5,
    "meeting": 8.0,
    "group_avoid": 8.0,
    "merge": 4.0,
    "angle_cross": 8.0,
    "arc": 2.0,
}


@dataclass(frozen=True)
class ScenarioParams:
    """
    Scenario knobs.

    Attributes:
        speed: Walking speed in m/s
        separation: Initial spacing in meters (None = per-kind default)
        n_frames: Samples per pedestrian (>= 20)
        noise_std: Gaussian position noise in meters
        angle_deg: Crossing angle for angle_cross
        radius: Arc radius in meters for arc
        lateral_offset: Sideways offset between opposing walkers in meters
        jitter: Relative random variation of speeds and start offsets
        frame_step: Raw frame-id increment per sample
        start_frame: Frame id of the first sample
    """
    speed: float = 1.0
    separation: Optional[float] = None
    n_frames: int = MIN_FRAMES
    noise_std: float = 0.0
    angle_deg: float = 90.0
    radius: float = 4.0
    lateral_offset: float = 0.0
    jitter: float = 0.0
    frame_step: int = 10
    start_frame: int = 0


def _straight(start, heading, speed: float, times: np.ndarray) -> np.ndarray:
    heading = np.asarray(heading, dtype=np.float64)
    heading = heading / np.linalg.norm(heading)
    return np.asarray(start, dtype=np.float64) + np.outer(times * speed, heading)


def _scenario_tracks(kind: str, params: ScenarioParams, rng: np.random.Generator) -> List[np.ndarray]:
    """Noise-free tracks [n_frames × 2] per pedestrian."""
    times = np.arange(params.n_frames) * DEFAULT_FRAME_INTERVAL
    sep = params.separation if params.separation is not None else DEFAULT_SEPARATION[kind]

    def jittered(value: float) -> float:
        if params.jitter <= 0:
            return value
        return value * (1.0 + rng.uniform(-params.jitter, params.jitter))

    v = params.speed
    if kind == "following":
        return [
            _straight((0.0, 0.0), (1, 0), jittered(v), times),
            _straight((jittered(sep), 0.0), (1, 0), jittered(v), times),
        ]
    if kind == "meeting":
        half = jittered(sep) / 2.0
        return [
            _straight((-half, 0.0), (1, 0), jittered(v), times),
            _straight((half, params.lateral_offset), (-1, 0), jittered(v), times),
        ]
    if kind == "group_avoid":
        half = jittered(sep) / 2.0
        group_speed = jittered(v)
        formation = [(0.0, 0.0), (0.5, 0.6), (0.5, -0.6)]
        tracks = [_straight((-half, params.lateral_offset), (1, 0), jittered(v), times)]
        for dx, dy in formation:
            tracks.append(_straight((half + dx, dy), (-1, 0), group_speed, times))
        return tracks
    if kind == "merge":
        # Branch walker heads for the junction at the origin, then continues along +x
        # behind the main walker.
        main_speed, branch_speed = jittered(v), jittered(v)
        main = _straight((-jittered(sep) / 2.0, 0.0), (1, 0), main_speed, times)
        branch_start = np.array([-sep, -sep])
        to_junction = np.linalg.norm(branch_start)
        travelled = times * branch_speed
        branch = np.empty((len(times), 2))
        on_branch = travelled <= to_junction
        branch[on_branch] = _straight(branch_start, -branch_start, 1.0, travelled[on_branch])
        branch[~on_branch] = np.outer(travelled[~on_branch] - to_junction, (1.0, 0.0))
        return [main, branch]
    if kind == "angle_cross":
        theta = np.deg2rad(params.angle_deg)
        direction = np.array([np.cos(theta), np.sin(theta)])
        reach = jittered(sep) / 2.0
        return [
            _straight((-reach, 0.0), (1, 0), jittered(v), times),
            _straight(-reach * direction, direction, jittered(v), times),
        ]
    if kind == "arc":
        radius = jittered(params.radius)
        omega = jittered(v) / radius
        centre = np.array([0.0, radius])
        tracks = []
        for phase in (sep / radius, 0.0):
            angle = -np.pi / 2 + phase + omega * times
            tracks.append(centre + radius * np.column_stack([np.cos(angle), np.sin(angle)]))
        return tracks
    raise UsageError(f"Unknown scenario kind '{kind}', expected one of {', '.join(SCENARIO_KINDS)}")


def synth_scenario(kind: str, params: Optional[ScenarioParams] = None, seed: int = 0,
                   name: Optional[str] = None, first_ped_id: int = 1) -> Scene:
    """
    Generate one social-interaction scene.

    Args:
        kind: One of SCENARIO_KINDS
        params: Scenario knobs (defaults: 1 m/s, 20 frames, no noise)
        seed: RNG seed; equal seeds give identical scenes
        name: Scene name (default: the kind)
        first_ped_id: Id of the first pedestrian

    Raises:
        UsageError: Unknown kind, fewer than 20 frames, or a non-positive
            separation or arc radius
    """
    params = params or ScenarioParams()
    if kind not in SCENARIO_KINDS:
        raise UsageError(f"Unknown scenario kind '{kind}', expected one of {', '.join(SCENARIO_KINDS)}")
    if params.n_frames < MIN_FRAMES:
        raise UsageError(f"Scenarios need at least {MIN_FRAMES} frames, got {params.n_frames}")
    if params.separation is not None and params.separation <= 0:
        raise UsageError(f"Scenario separation must be positive, got {params.separation}")
    if params.radius <= 0:
        raise UsageError(f"Arc radius must be positive, got {params.radius}")

    rng = np.random.default_rng(seed)
    tracks = _scenario_tracks(kind, params, rng)
    if params.noise_std > 0:
        tracks = [t + rng.normal(0.0, params.noise_std, size=t.shape) for t in tracks]

    observations = []
    for offset, track in enumerate(tracks):
        for step, (x, y) in enumerate(track):
            frame = params.start_frame + step * params.frame_step
            observations.append(Observation(frame, first_ped_id + offset, float(x), float(y)))
    observations.sort(key=lambda o: (o.frame_id, o.ped_id))
    return Scene(name=name or kind, observations=observations, frame_interval=DEFAULT_FRAME_INTERVAL)


def synth_mixture(kinds: Sequence[str], n_scenes: int, params: Optional[ScenarioParams] = None,
                  seed: int = 0, lane_spacing: float = 20.0, name: str = "mixture") -> Scene:
    """
    Several scenario groups sharing one recording.

    Scene i holds one group per kind, each shifted into its own lane
    (``lane_spacing`` meters apart) and all co-present over the same frames;
    consecutive scenes occupy disjoint frame ranges separated by one empty
    frame, so no window mixes two scenes.

    Returns:
        One Scene with distinct pedestrian ids
    """
    params = params or ScenarioParams()
    observations: List[Observation] = []
    next_ped = 1
    frames_per_scene = params.n_frames + 1
    for i in range(n_scenes):
        start = params.start_frame + i * frames_per_scene * params.frame_step
        for lane, kind in enumerate(kinds):
            sub = synth_scenario(kind, replace(params, start_frame=start),
                                 seed=seed * 1000 + i * len(kinds) + lane, first_ped_id=next_ped)
            shift = lane * lane_spacing
            ids = sub.pedestrian_ids()
            observations.extend(Observation(o.frame_id, o.ped_id, o.x, o.y + shift) for o in sub.observations)
            next_ped += len(ids)
    observations.sort(key=lambda o: (o.frame_id, o.ped_id))
    logger.info(f"Synthesised mixture '{name}': {n_scenes} scenes x {list(kinds)}, {next_ped - 1} pedestrians")
    return Scene(name=name, observations=observations, frame_interval=DEFAULT_FRAME_INTERVAL)
