"""
Run configuration

Validated, immutable model and training settings. Defaults are the
ETH/UCY setup: batch 128, 250 epochs, SGD at 0.001, encoder 32 /
decoder 64, 8 observed and 12 predicted steps at 0.4 s.
"""

from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.utils.json_loader import JSONLoader


class ModelConfig(BaseModel):
    """Layer widths of the ST-Block / encoder / decoder stack."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    in_channels: int = Field(2, ge=1)
    tcn_kernel: int = Field(3, ge=1)
    tcn_hidden: int = Field(32, ge=1)
    gcn_hidden: int = Field(64, ge=1)
    gcn_out: int = Field(32, ge=1)
    tcn_out: int = Field(32, ge=1)
    n_blocks: int = Field(1, ge=1)
    per_sublayer_norm: bool = False
    encoder_hidden: int = Field(32, ge=1)
    decoder_hidden: int = Field(64, ge=1)
    embedding_dim: int = Field(16, ge=1)
    head_hidden: int = Field(32, ge=1)
    prelu_init: float = 0.25
    forget_bias: float = 1.0
    residual_output: bool = False
    radius: Optional[float] = Field(None, gt=0)

    @property
    def feature_dim(self) -> int:
        """Channels of the concatenated temporal + spatial streams."""
        return self.tcn_out + self.gcn_out


class TrainConfig(BaseModel):
    """Optimisation and windowing settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(250, ge=1)
    batch_size: int = Field(128, ge=1)
    lr: float = Field(0.001, ge=0)
    lambda_recon: float = Field(0.1, ge=0)
    grad_clip_norm: float = Field(10.0, gt=0)
    seed: int = Field(0, ge=0)
    t_obs: int = Field(8, ge=1)
    t_pred: int = Field(12, ge=1)
    stride: int = Field(1, ge=1)
    teacher_forcing: bool = True
    lr_decay_every: int = Field(0, ge=0)
    lr_decay_factor: float = Field(0.5, gt=0, le=1)
    eval_workers: int = Field(4, ge=1)

    def learning_rate(self, epoch: int) -> float:
        """Step-decayed learning rate for a 1-based epoch (constant when decay is off)."""
        if self.lr_decay_every <= 0:
            return self.lr
        return self.lr * self.lr_decay_factor ** ((epoch - 1) // self.lr_decay_every)


def load_run_config(path: Path) -> Dict[str, Any]:
    """
    Load a run configuration file.

    Expected layout:
    {
        "model": {... ModelConfig fields ...},
        "training": {... TrainConfig fields ...}
    }

    Returns:
        {"model": ModelConfig, "training": TrainConfig}
    """
    data = JSONLoader.load(Path(path))
    return {
        "model": ModelConfig(**data.get("model", {})),
        "training": TrainConfig(**data.get("training", {})),
    }
