"""
Model Gradient Suite

Finite-difference checks of the assembled network at reduced widths
(2 pedestrians, 4 observed steps, 3 decoded steps) so every parameter can
be perturbed individually in well under a minute.

Checks:
    st_block          random projection of the block output
    reconstruction    inner-product graph loss on the block's embeddings
    full_model        L2 + reconstruction loss of the whole forward pass
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np

from src.core import functional as F
from src.core.gradcheck import DEFAULT_STEP, DEFAULT_TOLERANCE, GradCheckReport, grad_check_report
from src.core.graph_builder import padded_snapshot_stack
from src.core.losses import total_loss
from src.core.model import TrajectoryForecaster
from src.core.params import ModelParams
from src.core.seq2seq import reconstruction_loss
from src.core.st_block import st_block
from src.core.tensor import Tensor
from src.models.config import ModelConfig

logger = logging.getLogger(__name__)

SUITE_CONFIG = ModelConfig(
    tcn_hidden=4,
    gcn_hidden=6,
    gcn_out=4,
    tcn_out=4,
    encoder_hidden=5,
    decoder_hidden=6,
    embedding_dim=3,
    head_hidden=4,
)
SUITE_PEDESTRIANS = 2
SUITE_T_OBS = 4
SUITE_T_PRED = 3

Corruption = Callable[[str, np.ndarray], np.ndarray]


def scaled_gradient(name: str, grad: np.ndarray) -> np.ndarray:
    """Negative control: a 1% gradient error must fail the check."""
    return grad * 1.01


def _suite_inputs(rng: np.random.Generator):
    obs = np.cumsum(rng.normal(0.0, 0.5, size=(1, SUITE_PEDESTRIANS, SUITE_T_OBS, 2)), axis=2)
    gt = obs[:, :, -1:, :] + np.cumsum(rng.normal(0.0, 0.5, size=(1, SUITE_PEDESTRIANS, SUITE_T_PRED, 2)), axis=2)
    mask = np.ones((1, SUITE_PEDESTRIANS), dtype=bool)
    adjacency, a_norm = padded_snapshot_stack(obs[0], mask[0])
    return obs, gt, mask, adjacency[None], a_norm[None]


def _perturbed_params(params: ModelParams, rng: np.random.Generator) -> ModelParams:
    """Move biases, gains and slopes off their initial constants so they are exercised."""
    arrays = {name: t.data + rng.normal(0.0, 0.1, size=t.shape) for name, t in params.items()}
    return ModelParams.from_arrays(arrays)


def run_gradient_suite(
    seed: int = 0,
    corrupt: Optional[Corruption] = None,
    h: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    config: ModelConfig = SUITE_CONFIG,
) -> Dict[str, GradCheckReport]:
    """
    Run every check; returns check name -> per-parameter report.
    """
    rng = np.random.default_rng(seed)
    model = TrajectoryForecaster(config)
    params = _perturbed_params(model.init_params(seed), rng)
    obs, gt, mask, adjacency, a_norm = _suite_inputs(rng)
    block = params.block(0)
    block_names = [n for n in params.names() if n.startswith("block0.")]
    block_tensors = [params[n] for n in block_names]
    projection = rng.normal(size=(1, SUITE_PEDESTRIANS, SUITE_T_OBS, config.feature_dim))

    def block_loss() -> Tensor:
        feats = st_block(obs, a_norm, mask, block)
        return F.sum(F.mul(feats.values, projection))

    def recon_loss() -> Tensor:
        feats = st_block(obs, a_norm, mask, block)
        return reconstruction_loss(feats.spatial, adjacency)

    def model_loss() -> Tensor:
        out = model.forward(params, obs, a_norm, mask, SUITE_T_PRED)
        return total_loss(out.pred, gt, mask, out.spatial, adjacency, lambda_recon=0.1).total

    recon_names = [n for n in block_names if ".tcn2." not in n and ".prelu" not in n and ".ln." not in n]
    checks = {
        "st_block": (block_loss, block_names, block_tensors),
        "reconstruction": (recon_loss, recon_names, [params[n] for n in recon_names]),
        "full_model": (model_loss, params.names(), params.tensors()),
    }

    reports: Dict[str, GradCheckReport] = {}
    for check, (fn, names, tensors) in checks.items():
        reports[check] = grad_check_report(fn, tensors, h=h, names=names, tolerance=tolerance, corrupt=corrupt)
        logger.info(f"gradcheck {check}: max relative error {reports[check].max_error:.3e} "
                    f"({reports[check].worst_parameter})")
    return reports


def suite_summary(reports: Dict[str, GradCheckReport]) -> Dict:
    worst = max(reports.values(), key=lambda r: r.max_error)
    return {
        "passed": all(r.passed for r in reports.values()),
        "max_error": worst.max_error,
        "tolerance": worst.tolerance,
        "checks": {name: r.to_dict() for name, r in reports.items()},
    }
