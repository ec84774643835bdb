"""
LSTM Encoder-Decoder

Per-node LSTM encoder over the ST-Block features, a linear bridge into the
wider decoder, and an autoregressive decoder that emits one position per
step. Also hosts the graph reconstruction objective (inner-product decoder
over the spatial embeddings).
"""

import logging
from typing import Optional, Tuple

import numpy as np

from src.core import functional as F
from src.core.errors import ContractError, DimensionError
from src.core.params import DecoderParams, LstmWeights
from src.core.tensor import Tensor, as_tensor

logger = logging.getLogger(__name__)

DECODE_MODES = ("free_running", "teacher_forcing")


def lstm_cell(h, c, x, weights: LstmWeights) -> Tuple[Tensor, Tensor]:
    """
    One LSTM step; every leading row is an independent node.

    gates = x W_ih^T + h W_hh^T + b, split as input, forget, cell, output.

    Returns:
        (h', c')
    """
    h, c, x = as_tensor(h), as_tensor(c), as_tensor(x)
    hidden = weights.hidden
    if h.shape[-1] != hidden or c.shape != h.shape:
        raise DimensionError(f"lstm_cell: state {h.shape}/{c.shape} does not match hidden size {hidden}")
    gates = F.add(F.linear(x, weights.w_ih, weights.bias), F.linear(h, weights.w_hh))
    i = F.sigmoid(gates[..., 0:hidden])
    f = F.sigmoid(gates[..., hidden:2 * hidden])
    g = F.tanh(gates[..., 2 * hidden:3 * hidden])
    o = F.sigmoid(gates[..., 3 * hidden:4 * hidden])
    c_next = F.add(F.mul(f, c), F.mul(i, g))
    h_next = F.mul(o, F.tanh(c_next))
    return h_next, c_next


def output_proj(h, w_hy, b_y) -> Tensor:
    """W_hy h + b_y."""
    return F.linear(h, w_hy, b_y)


def encode(features, weights: LstmWeights) -> Tuple[Tensor, Tensor]:
    """
    Run the encoder LSTM over time from a zero state.

    Args:
        features: [B × N × T × D]

    Returns:
        (h_enc, c_enc), each [B × N × H]
    """
    features = as_tensor(features)
    if features.ndim != 4:
        raise DimensionError(f"encode expects [B, N, T, D] features, got {features.shape}")
    batch, nodes, steps, _ = features.shape
    h = Tensor(np.zeros((batch, nodes, weights.hidden)))
    c = Tensor(np.zeros((batch, nodes, weights.hidden)))
    for t in range(steps):
        h, c = lstm_cell(h, c, features[:, :, t, :], weights)
    return h, c


def _head(h: Tensor, params: DecoderParams) -> Tensor:
    hidden = F.relu(F.linear(h, params.head_w1, params.head_b1))
    return output_proj(hidden, params.head_w2, params.head_b2)


def decode(
    h_enc,
    c_enc,
    last_obs_pos,
    b_st_last,
    t_pred: int,
    params: DecoderParams,
    mode: str = "free_running",
    ground_truth: Optional[np.ndarray] = None,
    residual: bool = False,
) -> Tensor:
    """
    Autoregressive decoding of t_pred positions.

    Args:
        h_enc, c_enc: [... × H_enc] encoder state
        last_obs_pos: [... × 2] last observed position
        b_st_last: [... × D] ST features of the last observed step
        t_pred: Steps to emit
        params: Bridge, embedding, LSTM and head parameters
        mode: free_running feeds back the prediction, teacher_forcing the truth
        ground_truth: [... × t_pred × 2], required for teacher forcing
        residual: The head emits a displacement added to the previous position

    Returns:
        [... × t_pred × 2]

    Raises:
        ContractError: t_pred < 1, unknown mode or missing ground truth
    """
    if t_pred < 1:
        raise ContractError(f"t_pred must be >= 1, got {t_pred}")
    if mode not in DECODE_MODES:
        raise ContractError(f"Unknown decode mode '{mode}', expected one of {DECODE_MODES}")
    b_st_last = as_tensor(b_st_last)
    if mode == "teacher_forcing":
        if ground_truth is None:
            raise ContractError("teacher forcing needs ground-truth positions")
        ground_truth = np.asarray(ground_truth, dtype=np.float64)
        if ground_truth.shape[-2] < t_pred - 1:
            raise DimensionError(f"ground truth {ground_truth.shape} is shorter than {t_pred} steps")

    h = F.linear(h_enc, params.bridge_w_h, params.bridge_b_h)
    c = F.linear(c_enc, params.bridge_w_c, params.bridge_b_c)
    prev = as_tensor(last_obs_pos)
    outputs = []
    for step in range(t_pred):
        embedded = F.relu(F.linear(prev, params.embed_w, params.embed_b))
        h, c = lstm_cell(h, c, F.concat([embedded, b_st_last], axis=-1), params.lstm)
        position = _head(h, params)
        if residual:
            position = F.add(prev, position)
        outputs.append(position)
        if mode == "teacher_forcing":
            prev = Tensor(ground_truth[..., step, :])
        else:
            prev = position
    return F.stack(outputs, axis=-2)


def link_prob(z_i: np.ndarray, z_j: np.ndarray) -> float:
    """Inner-product decoder: sigmoid(z_i · z_j)."""
    return float(F._sigmoid(np.dot(np.asarray(z_i, dtype=np.float64), np.asarray(z_j, dtype=np.float64))))


def reconstruction_loss(embeddings, adjacency: np.ndarray, node_mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Mean binary cross-entropy between Ã = A + I and sigmoid(h_i · h_j).

    BCE(y, sigmoid(z)) = softplus(z) - y·z keeps large logits finite. Each
    graph is normalised by its own n² (n = present nodes), then graphs are
    averaged over every leading axis (samples and time steps).

    Args:
        embeddings: [... × n × d]
        adjacency: [... × n × n] binary, zero diagonal
        node_mask: [... × n] booleans (default: all present)

    Returns:
        Scalar tensor
    """
    embeddings = as_tensor(embeddings)
    adjacency = np.asarray(adjacency, dtype=np.float64)
    n = embeddings.shape[-2]
    if adjacency.shape[-2:] != (n, n):
        raise DimensionError(f"reconstruction_loss: adjacency {adjacency.shape} does not match {embeddings.shape}")
    if node_mask is None:
        node_mask = np.ones(embeddings.shape[:-1], dtype=bool)
    node_mask = np.broadcast_to(np.asarray(node_mask, dtype=np.float64), embeddings.shape[:-1])
    pair_mask = node_mask[..., :, None] * node_mask[..., None, :]
    target = (adjacency + np.eye(n)) * pair_mask

    logits = F.matmul(embeddings, F.transpose(embeddings))
    per_pair = F.sub(F.softplus(logits), F.mul(logits, target))
    per_graph = F.sum(F.mul(per_pair, pair_mask), axis=(-2, -1))
    counts = np.maximum(pair_mask.sum(axis=(-2, -1)), 1.0)
    return F.mean(F.div(per_graph, counts))
