"""
RunManifest - Input Tracking for Reproducible Runs

Hashes every input file (SHA-256) and records the command, configuration
and seed next to a command's outputs as ``<output>.manifest.json``.
Timestamps are the only fields that differ between identical runs.
"""

import hashlib
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from src import __version__
from src.models.reports import RunManifest
from src.utils.json_loader import JSONLoader

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def compute_file_hash(file_path: Path) -> str:
    """
    SHA-256 of a file as a hex string.

    Raises:
        FileNotFoundError: If the file does not exist
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    sha256 = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(8192), b''):
            sha256.update(chunk)
    return sha256.hexdigest()


def hash_inputs(paths: Iterable[Union[str, Path]]) -> Dict[str, str]:
    """Path -> SHA-256 for every input file (sorted by path)."""
    return {str(p): compute_file_hash(Path(p)) for p in sorted(Path(p) for p in paths)}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def start_manifest(command: str, config: Dict[str, Any], seed: Optional[int],
                   inputs: Iterable[Union[str, Path]] = ()) -> RunManifest:
    return RunManifest(
        command=command,
        config=config,
        seed=seed,
        input_hashes=hash_inputs(inputs),
        tool_version=__version__,
        started_at=_now(),
    )


def manifest_path(output: Union[str, Path]) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


def stdout_anchor(command: str) -> Path:
    """Stand-in output of a command that printed to stdout: ./stgt-<command>."""
    return Path.cwd() / f"stgt-{command}"


def finish_manifest(manifest: RunManifest, output: Union[str, Path],
                    outputs: Optional[List[Union[str, Path]]] = None) -> Path:
    """
    Stamp the finish time and write the manifest next to ``output``.

    ``outputs`` defaults to ``[output]``; an empty list records a run whose
    only output went to stdout.
    """
    manifest.finished_at = _now()
    manifest.outputs = sorted(str(p) for p in (outputs if outputs is not None else [output]))
    path = manifest_path(output)
    JSONLoader.save(manifest.to_dict(), path)
    logger.debug(f"Manifest written to {path}")
    return path
