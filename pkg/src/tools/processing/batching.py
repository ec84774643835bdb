"""
Mini-batch Assembly

Pads normalised windows to a common node count and attaches one interaction
graph per observed step. Graphs depend only on a window's observed
positions, so they are built once per window and reused across epochs.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.core.errors import ContractError
from src.core.graph_builder import padded_snapshot_stack
from src.models.trajectory import SequenceBatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowGraphs:
    """A normalised window with its per-step graphs ([T_obs × n × n] each)."""
    window: SequenceBatch
    adjacency: np.ndarray
    a_norm: np.ndarray


@dataclass(frozen=True)
class ModelBatch:
    """
    Padded model input.

    Attributes:
        obs: [B × N × T_obs × 2] normalised observed positions (zeros when padded)
        gt: [B × N × T_pred × 2] normalised ground truth
        node_mask: [B × N]
        adjacency: [B × T_obs × N × N] binary
        a_norm: [B × T_obs × N × N] normalised (identity rows for padding)
        windows: Source windows, in batch order
    """
    obs: np.ndarray
    gt: np.ndarray
    node_mask: np.ndarray
    adjacency: np.ndarray
    a_norm: np.ndarray
    windows: List[SequenceBatch]

    @property
    def size(self) -> int:
        return int(self.obs.shape[0])


def window_graphs(window: SequenceBatch, radius: Optional[float] = None) -> WindowGraphs:
    adjacency, a_norm = padded_snapshot_stack(window.positions_obs, window.node_mask, radius)
    return WindowGraphs(window=window, adjacency=adjacency, a_norm=a_norm)


def prepare_windows(windows: Sequence[SequenceBatch], radius: Optional[float] = None) -> List[WindowGraphs]:
    """Build the graph cache for a list of normalised windows."""
    prepared = [window_graphs(w, radius) for w in windows]
    logger.debug(f"Built interaction graphs for {len(prepared)} windows")
    return prepared


def collate(items: Sequence[WindowGraphs]) -> ModelBatch:
    """
    Stack windows into one padded batch.

    Raises:
        ContractError: If the list is empty or window lengths differ
    """
    if not items:
        raise ContractError("cannot collate an empty batch")
    t_obs, t_pred = items[0].window.t_obs, items[0].window.t_pred
    if any(it.window.t_obs != t_obs or it.window.t_pred != t_pred for it in items):
        raise ContractError("all windows of a batch must share t_obs and t_pred")

    size = len(items)
    n_max = max(it.window.n_nodes for it in items)
    obs = np.zeros((size, n_max, t_obs, 2))
    gt = np.zeros((size, n_max, t_pred, 2))
    mask = np.zeros((size, n_max), dtype=bool)
    adjacency = np.zeros((size, t_obs, n_max, n_max))
    a_norm = np.tile(np.eye(n_max), (size, t_obs, 1, 1))

    for b, item in enumerate(items):
        n = item.window.n_nodes
        obs[b, :n] = item.window.positions_obs
        gt[b, :n] = item.window.positions_gt
        mask[b, :n] = item.window.node_mask
        adjacency[b, :, :n, :n] = item.adjacency
        a_norm[b, :, :n, :n] = item.a_norm

    return ModelBatch(obs=obs, gt=gt, node_mask=mask, adjacency=adjacency, a_norm=a_norm,
                      windows=[it.window for it in items])


def iterate_batches(items: Sequence[WindowGraphs], batch_size: int,
                    order: Optional[np.ndarray] = None) -> List[ModelBatch]:
    """Split (optionally permuted) windows into consecutive batches."""
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    indices = np.arange(len(items)) if order is None else np.asarray(order)
    return [
        collate([items[i] for i in indices[start:start + batch_size]])
        for start in range(0, len(indices), batch_size)
    ]
