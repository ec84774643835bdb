"""
Pedestrian graph snapshot model.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GraphSnapshot:
    """
    Interaction graph of the pedestrians present at one time step.

    Attributes:
        node_ids: [n] pedestrian ids, in row order
        features: [n × 2] positions in meters (X_t)
        adjacency: [n × n] binary, symmetric, zero diagonal (A)
        a_norm: [n × n] D̃^{-1/2} (A + I) D̃^{-1/2}

    Self-loops live only inside ``a_norm``; ``adjacency`` never stores them.
    """
    node_ids: np.ndarray
    features: np.ndarray
    adjacency: np.ndarray
    a_norm: np.ndarray

    @property
    def n(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2
