"""
Spatio-Temporal Block

Gated causal temporal convolution, a two-layer graph convolution applied at
every time step, a second gated temporal convolution on the spatial
embeddings, then PReLU and layer normalisation. The block emits the
temporal stream concatenated with the spatial stream.

Layouts:
    node features   [B × N × T × C]
    conv layout     [B × N × C × T]  (channels before time for conv1d_causal)
    graph layout    [B × T × N × C]  (one graph per time step)
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core import functional as F
from src.core.errors import ContractError, DimensionError
from src.core.params import STBlockParams, TemporalConvParams
from src.core.tensor import Tensor, as_tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class STFeatures:
    """
    Output of an ST-Block.

    Attributes:
        values: [B × N × T × (C_out + C_g1)] temporal stream then spatial stream
        node_mask: [B × N] booleans
        spatial: [B × T × N × C_g1] per-step spatial embeddings H
    """
    values: Tensor
    node_mask: np.ndarray
    spatial: Tensor


def _apply_mask(x: Tensor, mask: np.ndarray, layout: str) -> Tensor:
    """Zero masked-out nodes; ``layout`` names where B and N sit."""
    m = mask.astype(np.float64)
    if layout == "nodes_first":    # [B, N, ...]
        shape = m.shape + (1,) * (x.ndim - 2)
    else:                          # [B, T, N, C]
        shape = (m.shape[0], 1, m.shape[1], 1)
    return F.mul(x, m.reshape(shape))


def gconv(z, a_norm, weight, activation: str = "linear", alpha=None) -> Tensor:
    """
    One graph convolution: act(a_norm · Z · W).

    Args:
        z: [..., n × C_in]
        a_norm: [..., n × n] normalised adjacency (broadcasts over leading dims)
        weight: [C_in × C_out]
        activation: Any name in functional.ACTIVATIONS
    """
    z, a_norm, weight = as_tensor(z), as_tensor(a_norm), as_tensor(weight)
    if z.shape[-1] != weight.shape[0]:
        raise DimensionError(f"gconv: features {z.shape} do not match weight {weight.shape}")
    if a_norm.shape[-1] != z.shape[-2]:
        raise DimensionError(f"gconv: adjacency {a_norm.shape} does not match features {z.shape}")
    return F.activation(F.matmul(F.matmul(a_norm, z), weight), activation, alpha)


def spatial_embed(x, a_norm, w0, w1) -> Tensor:
    """Two-layer GCN: ReLU hidden layer, linear output layer."""
    hidden = gconv(x, a_norm, w0, "relu")
    return gconv(hidden, a_norm, w1, "linear")


def temporal_conv(x, params: TemporalConvParams) -> Tensor:
    """
    Gated linear unit over time: conv_P(x) ⊙ sigmoid(conv_Q(x)).

    Args:
        x: [..., C_in × T]

    Returns:
        [..., C_out × T], causal and length preserving
    """
    p = F.conv1d_causal(x, params.p_kernel, params.p_bias)
    q = F.conv1d_causal(x, params.q_kernel, params.q_bias)
    return F.mul(p, F.sigmoid(q))


def st_block(inputs, a_norm, node_mask: np.ndarray, params: STBlockParams,
             per_sublayer_norm: Optional[bool] = None) -> STFeatures:
    """
    Run one ST-Block.

    Args:
        inputs: [B × N × T × C_in]
        a_norm: [B × T × N × N], one normalised adjacency per time step
        node_mask: [B × N] booleans; masked nodes are zeroed after every stage
        params: Block parameters
        per_sublayer_norm: Normalise after the first temporal conv and after
            the GCN as well (default: whenever params carry those norms)

    Raises:
        ContractError: If the number of snapshots differs from T
        DimensionError: On any channel mismatch
    """
    inputs, a_norm = as_tensor(inputs), as_tensor(a_norm)
    node_mask = np.asarray(node_mask, dtype=bool)
    if inputs.ndim != 4:
        raise DimensionError(f"st_block expects [B, N, T, C] inputs, got {inputs.shape}")
    batch, nodes, steps, _ = inputs.shape
    if a_norm.ndim != 4 or a_norm.shape[1] != steps:
        raise ContractError(
            f"st_block: got {a_norm.shape[1] if a_norm.ndim == 4 else a_norm.shape} "
            f"adjacency snapshots for {steps} time steps"
        )
    if a_norm.shape != (batch, steps, nodes, nodes):
        raise DimensionError(f"st_block: adjacency {a_norm.shape} does not match inputs {inputs.shape}")
    if node_mask.shape != (batch, nodes):
        raise DimensionError(f"st_block: mask {node_mask.shape} does not match inputs {inputs.shape}")

    norms = params.sublayer_norms if per_sublayer_norm in (None, True) else None
    if per_sublayer_norm and norms is None:
        raise ContractError("per-sub-layer normalisation requested but the block has no such parameters")

    # Temporal gate 1: [B, N, C_in, T] -> [B, N, C_h, T]
    x = _apply_mask(F.transpose(inputs, (0, 1, 3, 2)), node_mask, "nodes_first")
    x = temporal_conv(x, params.tcn1)
    if norms:
        x = F.layer_norm(x, *norms["ln_tcn1"], axis=-2)
    x = _apply_mask(x, node_mask, "nodes_first")

    # Spatial embedding per step: [B, T, N, C_h] -> [B, T, N, C_g1]
    z = F.transpose(x, (0, 3, 1, 2))
    spatial = spatial_embed(z, a_norm, params.gcn_w0, params.gcn_w1)
    if norms:
        spatial = F.layer_norm(spatial, *norms["ln_gcn"], axis=-1)
    spatial = _apply_mask(spatial, node_mask, "steps_first")

    # Temporal gate 2 on S: [B, N, C_g1, T] -> [B, N, C_out, T]
    y = temporal_conv(F.transpose(spatial, (0, 2, 3, 1)), params.tcn2)
    y = F.prelu(y, params.prelu)
    y = F.transpose(y, (0, 1, 3, 2))
    y = F.layer_norm(y, params.ln_gain, params.ln_bias, axis=-1)
    temporal = _apply_mask(y, node_mask, "nodes_first")

    values = F.concat([temporal, F.transpose(spatial, (0, 2, 1, 3))], axis=-1)
    return STFeatures(values=values, node_mask=node_mask, spatial=spatial)
