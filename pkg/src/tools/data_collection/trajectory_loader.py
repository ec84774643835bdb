"""
Trajectory File Loader

Reads and writes the community ETH/UCY text layout: one observation per
line, whitespace separated ``frame_id ped_id x y`` with coordinates in
meters. Ids written as floats (``780.0``) are truncated to integers.
"""

import logging
import math
from pathlib import Path
from typing import List, Union

from src.core.errors import DataError, ParseError
from src.models.trajectory import DEFAULT_FRAME_INTERVAL, Observation, Scene

logger = logging.getLogger(__name__)

SCENE_SUFFIXES = (".txt",)


def parse_line(line: str, line_number: int, path: str = None) -> Observation:
    fields = line.split()
    if len(fields) != 4:
        raise ParseError(f"expected 4 fields 'frame_id ped_id x y', got {len(fields)}", line_number, path)
    try:
        frame_f, ped_f, x, y = (float(v) for v in fields)
    except ValueError:
        raise ParseError(f"non-numeric field in {line.strip()!r}", line_number, path) from None
    if not all(math.isfinite(v) for v in (frame_f, ped_f, x, y)):
        raise ParseError(f"non-finite value in {line.strip()!r}", line_number, path)
    return Observation(int(frame_f), int(ped_f), x, y)


def parse_text(text: str, name: str, frame_interval: float = DEFAULT_FRAME_INTERVAL, path: str = None) -> Scene:
    """
    Parse trajectory text into a Scene.

    Raises:
        ParseError: Malformed line (with its 1-based line number)
        DataError: Duplicate (frame_id, ped_id) pair
    """
    observations: List[Observation] = []
    seen = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        obs = parse_line(line, line_number, path)
        key = (obs.frame_id, obs.ped_id)
        if key in seen:
            raise DataError(
                f"{path or name}:{line_number}: duplicate observation of pedestrian {obs.ped_id} "
                f"at frame {obs.frame_id} (first on line {seen[key]})"
            )
        seen[key] = line_number
        observations.append(obs)

    observations.sort(key=lambda o: (o.frame_id, o.ped_id))
    return Scene(name=name, observations=observations, frame_interval=frame_interval)


def parse_dataset(path: Union[str, Path], frame_interval: float = DEFAULT_FRAME_INTERVAL) -> Scene:
    """
    Load one trajectory file.

    Args:
        path: Text file with ``frame_id ped_id x y`` lines
        frame_interval: Seconds between consecutive re-indexed steps

    Returns:
        Scene named after the file stem, observations sorted by (frame, ped)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found: {path}")
    scene = parse_text(path.read_text(encoding="utf-8"), path.stem, frame_interval, str(path))
    logger.info(f"Loaded scene {scene.name}: {len(scene)} observations, {len(scene.pedestrian_ids())} pedestrians")
    return scene


def format_scene(scene: Scene) -> str:
    """Scene as trajectory text; floats use repr so parsing restores them exactly."""
    lines = [f"{o.frame_id}\t{o.ped_id}\t{o.x!r}\t{o.y!r}" for o in scene.observations]
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_scene(scene: Scene, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_scene(scene), encoding="utf-8")
    return path


def scene_files(directory: Union[str, Path]) -> List[Path]:
    """Trajectory files of a directory (or the single file given), in name order."""
    directory = Path(directory)
    if directory.is_file():
        return [directory]
    if not directory.is_dir():
        raise FileNotFoundError(f"Data path not found: {directory}")
    return sorted(p for p in directory.rglob("*") if p.is_file() and p.suffix in SCENE_SUFFIXES)


def load_scene_dir(directory: Union[str, Path], frame_interval: float = DEFAULT_FRAME_INTERVAL) -> List[Scene]:
    """
    Load every trajectory file under a directory.

    Raises:
        DataError: If the directory holds no trajectory files
    """
    files = scene_files(directory)
    if not files:
        raise DataError(f"No trajectory files (*.txt) under {directory}")
    return [parse_dataset(p, frame_interval) for p in files]
