"""
Gradient Checking

Compares tape gradients against central finite differences.

Relative error of one parameter tensor:
    ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8)
with Euclidean norms over the tensor's elements. The reported error is the
maximum over parameters.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import ContractError
from .tensor import Tape, Tensor

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
NORM_FLOOR = 1e-8


@dataclass
class GradCheckReport:
    """Per-parameter relative errors of one gradient check."""
    errors: Dict[str, float] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE
    step: float = DEFAULT_STEP

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def worst_parameter(self) -> Optional[str]:
        if not self.errors:
            return None
        return max(self.errors, key=lambda name: self.errors[name])

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "max_error": self.max_error,
            "worst_parameter": self.worst_parameter,
            "tolerance": self.tolerance,
            "step": self.step,
            "errors": dict(sorted(self.errors.items())),
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """
    ||a - n|| / max(||a||, ||n||, 1e-8) over the whole tensor.

    Norms, not the element-wise max of |a - n| / max(|a|, |n|, 1e-8): an
    entry whose gradient is ~0 is scaled by its tensor, not by itself.
    """
    diff = np.linalg.norm(np.ravel(analytic - numeric))
    scale = max(np.linalg.norm(np.ravel(analytic)), np.linalg.norm(np.ravel(numeric)), NORM_FLOOR)
    return float(diff / scale)


def _show(param: Tensor, work: np.ndarray) -> None:
    view = work.view()
    view.setflags(write=False)
    param.data = view


def numeric_gradient(f: Callable[[], Tensor], param: Tensor, h: float = DEFAULT_STEP) -> np.ndarray:
    """
    Central-difference gradient of f with respect to one parameter.

    f sees read-only views of a perturbed copy of the parameter's data; the
    original array object is put back in a ``finally`` block, so the tensor
    is unchanged (same values, still read-only) even when f raises. f must
    read the parameter each time it is called.
    """
    original = param.data
    grad = np.zeros(param.shape)
    work = original.copy()
    try:
        for idx in np.ndindex(*param.shape):
            saved = work[idx]
            work[idx] = saved + h
            _show(param, work)
            plus = f().item()
            work[idx] = saved - h
            _show(param, work)
            minus = f().item()
            work[idx] = saved
            grad[idx] = (plus - minus) / (2.0 * h)
    finally:
        param.data = original
    return grad


def analytic_gradients(f: Callable[[], Tensor], params: Sequence[Tensor]) -> List[np.ndarray]:
    for p in params:
        if not p.requires_grad:
            raise ContractError(f"grad_check parameter {p.name or p.shape} does not require grad")
    with Tape() as tape:
        loss = f()
    grads = tape.backward(loss)
    return [grads[p].copy() for p in params]


def grad_check_report(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = DEFAULT_STEP,
    names: Optional[Sequence[str]] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    corrupt: Optional[Callable[[str, np.ndarray], np.ndarray]] = None,
) -> GradCheckReport:
    """
    Check every parameter of a deterministic scalar function.

    Args:
        f: Zero-argument function building the loss from ``params``
        params: Tensors requiring grad
        h: Finite-difference step
        names: Labels for the report (default: tensor names or indices)
        tolerance: Pass threshold for the maximum relative error
        corrupt: Optional hook altering an analytic gradient (negative control)

    Returns:
        GradCheckReport
    """
    params = list(params)
    if names is None:
        names = [p.name or f"param_{i}" for i, p in enumerate(params)]
    analytic = analytic_gradients(f, params)

    report = GradCheckReport(tolerance=tolerance, step=h)
    for name, param, grad in zip(names, params, analytic):
        if corrupt is not None:
            grad = corrupt(name, grad)
        numeric = numeric_gradient(f, param, h)
        report.errors[name] = relative_error(grad, numeric)
        logger.debug(f"gradcheck {name}: {report.errors[name]:.3e}")
    return report


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = DEFAULT_STEP) -> float:
    """Maximum relative error between analytic and central-difference gradients."""
    return grad_check_report(f, params, h).max_error
