"""
Graph Builder

Builds the per-timestep pedestrian interaction graph (NetworkX) and its
symmetrically normalised adjacency operator.

Edge rule:
    i ~ j  iff  i != j and (radius is None or ||p_i - p_j|| <= radius)

With no radius every co-present pedestrian is connected to every other.
"""

import logging
from typing import Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from src.core.errors import ContractError, DimensionError
from src.models.graph import GraphSnapshot

logger = logging.getLogger(__name__)


def interaction_graph(positions: np.ndarray, ids: Sequence[int], radius: Optional[float] = None) -> nx.Graph:
    """
    Undirected interaction graph of one time step.

    Node attributes: ``pos`` (x, y) in meters. Edge attributes: ``distance``.
    """
    positions = np.asarray(positions, dtype=np.float64)
    ids = [int(i) for i in ids]
    if positions.ndim != 2 or positions.shape[1] != 2 or positions.shape[0] != len(ids):
        raise DimensionError(f"positions {positions.shape} do not match {len(ids)} node ids")

    graph = nx.Graph()
    for node_id, (x, y) in zip(ids, positions):
        graph.add_node(node_id, pos=(float(x), float(y)))

    diffs = positions[:, None, :] - positions[None, :, :]
    distances = np.sqrt((diffs ** 2).sum(axis=-1))
    rows, cols = np.triu_indices(len(ids), k=1)
    for i, j in zip(rows, cols):
        if radius is None or distances[i, j] <= radius:
            graph.add_edge(ids[i], ids[j], distance=float(distances[i, j]))
    return graph


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """
    D̃^{-1/2} (A + I) D̃^{-1/2}.

    Entry (i, j) is computed as Ã_ij / sqrt(D̃_ii * D̃_jj), which keeps the
    result exactly symmetric.

    Raises:
        ContractError: If A is not square and symmetric
    """
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ContractError(f"adjacency must be square, got shape {adjacency.shape}")
    if not np.array_equal(adjacency, adjacency.T):
        raise ContractError("adjacency must be symmetric")
    a_tilde = adjacency + np.eye(adjacency.shape[0])
    degree = a_tilde.sum(axis=1)
    return a_tilde / np.sqrt(np.outer(degree, degree))


def build_snapshot(positions: np.ndarray, ids: Sequence[int], radius: Optional[float] = None) -> GraphSnapshot:
    """
    Graph snapshot of the pedestrians present at one time step.

    Args:
        positions: [n × 2] meters
        ids: [n] pedestrian ids (row order)
        radius: Edge cutoff in meters; None connects everyone

    Raises:
        ContractError: If n == 0
    """
    positions = np.asarray(positions, dtype=np.float64)
    if len(ids) == 0:
        raise ContractError("cannot build a graph snapshot of an empty graph")
    graph = interaction_graph(positions, ids, radius)
    order = [int(i) for i in ids]
    adjacency = nx.to_numpy_array(graph, nodelist=order, weight=None, dtype=np.float64)
    return GraphSnapshot(
        node_ids=np.asarray(order, dtype=np.int64),
        features=positions.copy(),
        adjacency=adjacency,
        a_norm=normalize_adjacency(adjacency),
    )


def padded_snapshot_stack(
    positions: np.ndarray,
    node_mask: np.ndarray,
    radius: Optional[float] = None,
    n_max: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-timestep adjacency and normalised adjacency of one padded window.

    Masked-in nodes form each step's graph; padded or masked-out nodes are
    isolated (zero adjacency, unit self-loop in a_norm).

    Args:
        positions: [N × T × 2]
        node_mask: [N] booleans
        radius: Edge cutoff in meters
        n_max: Pad to this many nodes (default N)

    Returns:
        (adjacency [T × n_max × n_max], a_norm [T × n_max × n_max])
    """
    positions = np.asarray(positions, dtype=np.float64)
    node_mask = np.asarray(node_mask, dtype=bool)
    n_nodes, steps = positions.shape[0], positions.shape[1]
    n_max = n_nodes if n_max is None else n_max
    rows = np.flatnonzero(node_mask)

    adjacency = np.zeros((steps, n_max, n_max))
    a_norm = np.tile(np.eye(n_max), (steps, 1, 1))
    if rows.size == 0:
        return adjacency, a_norm

    block = np.ix_(rows, rows)
    for t in range(steps):
        snapshot = build_snapshot(positions[rows, t], rows, radius)
        adjacency[t][block] = snapshot.adjacency
        a_norm[t][block] = snapshot.a_norm
    return adjacency, a_norm
