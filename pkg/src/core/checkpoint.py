"""
Checkpoint Format

    b"STGTCKPT\\n"                      magic line
    <uint32 little-endian>              header length in bytes
    <UTF-8 JSON header>                 {version, model_config, train_config, params}
    <float64 little-endian payload>     every parameter, row-major, header order

Each header params entry is {name, shape, offset, count}; offset and count
are in float64 elements from the start of the payload. The header is
written with sorted keys, so identical parameters give identical files.
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from src.core.errors import CheckpointError, DimensionError
from src.core.params import ModelParams, check_compatible
from src.models.config import ModelConfig, TrainConfig
from src.utils.json_loader import JSONLoader

logger = logging.getLogger(__name__)

MAGIC = b"STGTCKPT\n"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")


@dataclass
class Checkpoint:
    params: ModelParams
    model_config: ModelConfig
    train_config: TrainConfig


def _layout(params: ModelParams) -> List[Dict[str, Any]]:
    entries, offset = [], 0
    for name, tensor in params.items():
        entries.append({"name": name, "shape": list(tensor.shape), "offset": offset, "count": tensor.size})
        offset += tensor.size
    return entries


def encode_checkpoint(params: ModelParams, model_config: ModelConfig,
                      train_config: Optional[TrainConfig] = None) -> bytes:
    header = {
        "version": FORMAT_VERSION,
        "model_config": model_config.model_dump(),
        "train_config": (train_config or TrainConfig()).model_dump(),
        "params": _layout(params),
    }
    header_bytes = JSONLoader.dumps(header).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(t.data, dtype="<f8").tobytes() for t in params.tensors())
    return MAGIC + _LENGTH.pack(len(header_bytes)) + header_bytes + payload


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Checkpoint:
    """
    Raises:
        CheckpointError: Bad magic, truncated file, unknown version, or
            parameters that do not fit the stored model config
    """
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{source}: not a checkpoint (bad magic)")
    pos = len(MAGIC)
    if len(blob) < pos + _LENGTH.size:
        raise CheckpointError(f"{source}: truncated header length")
    (header_len,) = _LENGTH.unpack_from(blob, pos)
    pos += _LENGTH.size
    if len(blob) < pos + header_len:
        raise CheckpointError(f"{source}: truncated header")
    try:
        header = json.loads(blob[pos:pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: unreadable header: {e}") from e
    pos += header_len

    version = header.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {version!r} (expected {FORMAT_VERSION})")

    try:
        model_config = ModelConfig(**header["model_config"])
        train_config = TrainConfig(**header["train_config"])
    except (KeyError, TypeError, ValidationError) as e:
        raise CheckpointError(f"{source}: invalid configuration in header: {e}") from e

    if (len(blob) - pos) % 8:
        raise CheckpointError(f"{source}: payload is not a whole number of float64 values")
    payload = np.frombuffer(blob, dtype="<f8", offset=pos) if len(blob) > pos else np.zeros(0)

    arrays: Dict[str, np.ndarray] = {}
    for entry in header.get("params", []):
        start, count = int(entry["offset"]), int(entry["count"])
        shape = tuple(int(d) for d in entry["shape"])
        if start + count > payload.size or int(np.prod(shape, dtype=np.int64)) != count:
            raise CheckpointError(f"{source}: parameter {entry['name']} does not fit the payload")
        arrays[entry["name"]] = payload[start:start + count].astype(np.float64).reshape(shape)

    params = ModelParams.from_arrays(arrays)
    try:
        check_compatible(params, model_config)
    except DimensionError as e:
        raise CheckpointError(f"{source}: {e}") from e
    return Checkpoint(params=params, model_config=model_config, train_config=train_config)


def save_checkpoint(path: Union[str, Path], params: ModelParams, model_config: ModelConfig,
                    train_config: Optional[TrainConfig] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(params, model_config, train_config))
    logger.info(f"Saved checkpoint with {params.num_parameters} parameters to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    checkpoint = decode_checkpoint(path.read_bytes(), str(path))
    logger.info(f"Loaded checkpoint {path}: {checkpoint.params.num_parameters} parameters")
    return checkpoint
