"""
Trajectory Forecaster

Stacked ST-Blocks feed a per-node LSTM encoder; the decoder rolls out the
future conditioned on the encoder state and the ST features of the last
observed step.

    obs [B,N,T,2] --ST-Block x k--> B_st [B,N,T,D] --encoder--> (h, c)
    (h, c), last obs, B_st[:, :, -1] --decoder--> pred [B,N,T_pred,2]
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from src.core.errors import DimensionError
from src.core.params import ModelParams, check_compatible, init_params
from src.core.seq2seq import decode, encode
from src.core.st_block import STFeatures, st_block
from src.core.tensor import Tensor
from src.models.config import ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForwardOutput:
    """
    Attributes:
        pred: [B × N × T_pred × 2] predicted positions (normalised frame)
        spatial: [B × T_obs × N × C_g1] last block's spatial embeddings
        features: [B × N × T_obs × D] last block's output
    """
    pred: Tensor
    spatial: Tensor
    features: Tensor


class TrajectoryForecaster:
    """Model definition bound to a config; parameters are passed per call."""

    def __init__(self, config: ModelConfig):
        self.config = config

    def init_params(self, seed: Union[int, np.random.SeedSequence] = 0) -> ModelParams:
        return init_params(self.config, seed)

    def check(self, params: ModelParams) -> None:
        check_compatible(params, self.config)

    def st_features(self, params: ModelParams, obs, a_norm: np.ndarray, node_mask: np.ndarray) -> List[STFeatures]:
        """Run every ST-Block; block k > 0 consumes block k-1's features."""
        outputs: List[STFeatures] = []
        x = obs
        for b in range(self.config.n_blocks):
            feats = st_block(x, a_norm, node_mask, params.block(b), self.config.per_sublayer_norm)
            outputs.append(feats)
            x = feats.values
        return outputs

    def forward(
        self,
        params: ModelParams,
        obs: np.ndarray,
        a_norm: np.ndarray,
        node_mask: np.ndarray,
        t_pred: int,
        mode: str = "free_running",
        ground_truth: Optional[np.ndarray] = None,
    ) -> ForwardOutput:
        """
        Args:
            obs: [B × N × T_obs × 2]
            a_norm: [B × T_obs × N × N]
            node_mask: [B × N]
            t_pred: Steps to forecast
            mode: free_running or teacher_forcing
            ground_truth: [B × N × T_pred × 2] for teacher forcing
        """
        obs = np.asarray(obs, dtype=np.float64)
        if obs.ndim != 4 or obs.shape[-1] != self.config.in_channels:
            raise DimensionError(f"observations must be [B, N, T, {self.config.in_channels}], got {obs.shape}")

        blocks = self.st_features(params, obs, a_norm, node_mask)
        features = blocks[-1].values
        h_enc, c_enc = encode(features, params.encoder())
        pred = decode(
            h_enc,
            c_enc,
            last_obs_pos=obs[:, :, -1, :],
            b_st_last=features[:, :, -1, :],
            t_pred=t_pred,
            params=params.decoder(),
            mode=mode,
            ground_truth=ground_truth,
            residual=self.config.residual_output,
        )
        return ForwardOutput(pred=pred, spatial=blocks[-1].spatial, features=features)

    def predict(self, params: ModelParams, obs: np.ndarray, a_norm: np.ndarray,
                node_mask: np.ndarray, t_pred: int) -> np.ndarray:
        """Free-running inference without a tape; padded nodes are zeroed."""
        out = self.forward(params, obs, a_norm, node_mask, t_pred)
        return out.pred.numpy() * np.asarray(node_mask, dtype=np.float64)[:, :, None, None]
