"""
Training objectives.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core import functional as F
from src.core.errors import ContractError, DimensionError
from src.core.seq2seq import reconstruction_loss
from src.core.tensor import Tensor, as_tensor


@dataclass(frozen=True)
class LossTerms:
    total: Tensor
    l2: float
    recon: float


def l2_loss(pred, gt: np.ndarray, node_mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Mean squared displacement over present nodes and predicted steps.

    Args:
        pred: [... × N × T × 2]
        gt: same shape
        node_mask: [... × N] (default: all present)

    Raises:
        ContractError: If no node is present
    """
    pred = as_tensor(pred)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise DimensionError(f"l2_loss: prediction {pred.shape} vs ground truth {gt.shape}")
    if node_mask is None:
        node_mask = np.ones(pred.shape[:-2], dtype=bool)
    weights = np.asarray(node_mask, dtype=np.float64)
    count = weights.sum() * pred.shape[-2]
    if count == 0:
        raise ContractError("l2_loss over an empty node mask")
    diff = F.sub(pred, gt)
    squared = F.sum(F.mul(diff, diff), axis=-1)
    return F.div(F.sum(F.mul(squared, weights[..., None])), count)


def total_loss(pred, gt: np.ndarray, node_mask: np.ndarray, spatial=None,
               adjacency: Optional[np.ndarray] = None, lambda_recon: float = 0.1) -> LossTerms:
    """
    l2_loss + lambda * mean-over-steps reconstruction_loss.

    Args:
        spatial: [B × T × N × C] embeddings H
        adjacency: [B × T × N × N]

    With lambda == 0 the reconstruction term is not built at all.
    """
    l2 = l2_loss(pred, gt, node_mask)
    if lambda_recon == 0 or spatial is None:
        return LossTerms(total=l2, l2=l2.item(), recon=0.0)
    if adjacency is None:
        raise ContractError("reconstruction term needs the adjacency stack")
    mask = np.asarray(node_mask, dtype=bool)
    steps = as_tensor(spatial).shape[1]
    step_mask = np.repeat(mask[:, None, :], steps, axis=1)
    recon = reconstruction_loss(spatial, adjacency, step_mask)
    total = F.add(l2, F.mul(recon, lambda_recon))
    return LossTerms(total=total, l2=l2.item(), recon=recon.item())
