"""
Error types

Every failure raised by the engine derives from a builtin (ValueError or
RuntimeError) and carries the process exit code the CLI maps it to.
"""

from typing import Dict, List, Optional

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class TrajectoryError(Exception):
    """Base class for all engine errors."""

    exit_code: int = EXIT_DATA


class DimensionError(TrajectoryError, ValueError):
    """Tensor shapes do not chain."""

    exit_code = EXIT_DATA


class ContractError(TrajectoryError, ValueError):
    """A precondition of an operation was violated."""

    exit_code = EXIT_DATA


class ParseError(TrajectoryError, ValueError):
    """Malformed line in a trajectory file."""

    exit_code = EXIT_DATA

    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[str] = None):
        self.line_number = line_number
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}:"
        if line_number is not None:
            location += f"{line_number}: "
        elif location:
            location += " "
        super().__init__(f"{location}{message}")


class DataError(TrajectoryError, ValueError):
    """Input data is well-formed but semantically invalid."""

    exit_code = EXIT_DATA


class UsageError(TrajectoryError, ValueError):
    """Bad command-line usage or unknown option value."""

    exit_code = EXIT_USAGE


class CheckpointError(TrajectoryError, ValueError):
    """Checkpoint cannot be read or does not match the requested run."""

    exit_code = EXIT_DATA


class NumericalError(TrajectoryError, RuntimeError):
    """NaN/Inf reached a loss or gradient."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        self.diagnostics = diagnostics or {}
        details = ""
        if self.diagnostics:
            details = " (" + ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items())) + ")"
        super().__init__(f"{message}{details}")


def non_finite_names(arrays: Dict[str, np.ndarray]) -> List[str]:
    """Names whose array contains NaN or Inf."""
    return [name for name, arr in arrays.items() if not np.all(np.isfinite(arr))]
