"""
Plain SGD with global-norm gradient clipping.
"""

import logging
from typing import Tuple

import numpy as np

from src.core.errors import NumericalError, non_finite_names
from src.core.params import ModelParams
from src.core.tensor import GradientMap, Tensor

logger = logging.getLogger(__name__)


def global_norm(grads: GradientMap, params: ModelParams) -> float:
    return float(np.sqrt(sum(float(np.sum(grads[t] ** 2)) for t in params.tensors())))


def sgd_step(params: ModelParams, grads: GradientMap, lr: float,
             clip_norm: float = 10.0) -> Tuple[ModelParams, float]:
    """
    p <- p - lr * g after scaling g so its global L2 norm is <= clip_norm.

    Returns:
        (new parameters, pre-clip gradient norm)

    Raises:
        NumericalError: Any gradient entry is NaN or Inf (names the parameters)
    """
    arrays = {name: grads[tensor] for name, tensor in params.items()}
    bad = non_finite_names(arrays)
    if bad:
        raise NumericalError(f"non-finite gradient in {', '.join(bad)}", {"parameters": bad})

    norm = global_norm(grads, params)
    scale = clip_norm / norm if clip_norm > 0 and norm > clip_norm else 1.0
    if scale < 1.0:
        logger.debug(f"Clipping gradient norm {norm:.3f} -> {clip_norm}")

    updated = {
        name: Tensor(tensor.data - lr * scale * arrays[name], requires_grad=True, name=name)
        for name, tensor in params.items()
    }
    return ModelParams(updated), norm
