"""
Tests for the training objective and the clipped SGD step.
"""

import numpy as np
import pytest

from src.core import functional as F
from src.core.errors import ContractError, NumericalError
from src.core.losses import l2_loss, total_loss
from src.core.optimizer import global_norm, sgd_step
from src.core.params import ModelParams, init_params
from src.core.seq2seq import reconstruction_loss
from src.core.tensor import Tape


def test_l2_loss_known_value():
    pred = np.zeros((1, 2, 2, 2))
    gt = np.zeros((1, 2, 2, 2))
    gt[0, 0, :, 0] = 3.0
    gt[0, 0, :, 1] = 4.0
    # node 0 is off by 5 m at both steps, node 1 is exact
    assert l2_loss(pred, gt).item() == pytest.approx(25.0 * 2 / 4)


def test_l2_loss_ignores_masked_nodes(rng):
    pred = rng.normal(size=(1, 3, 4, 2))
    gt = rng.normal(size=(1, 3, 4, 2))
    mask = np.array([[True, True, False]])
    garbage = gt.copy()
    garbage[0, 2] += 100.0
    assert l2_loss(pred, gt, mask).item() == pytest.approx(l2_loss(pred, garbage, mask).item())
    assert l2_loss(pred, gt, mask).item() == pytest.approx(l2_loss(pred[:, :2], gt[:, :2]).item())


def test_l2_loss_empty_mask():
    with pytest.raises(ContractError):
        l2_loss(np.zeros((1, 2, 3, 2)), np.zeros((1, 2, 3, 2)), np.zeros((1, 2), dtype=bool))


def test_total_loss_without_reconstruction(rng):
    pred, gt = rng.normal(size=(1, 2, 3, 2)), rng.normal(size=(1, 2, 3, 2))
    mask = np.ones((1, 2), dtype=bool)
    terms = total_loss(pred, gt, mask, spatial=rng.normal(size=(1, 4, 2, 3)),
                       adjacency=np.zeros((1, 4, 2, 2)), lambda_recon=0.0)
    assert terms.recon == 0.0
    assert terms.total.item() == pytest.approx(l2_loss(pred, gt, mask).item())


def test_total_loss_adds_weighted_reconstruction(rng):
    pred, gt = rng.normal(size=(1, 2, 3, 2)), rng.normal(size=(1, 2, 3, 2))
    mask = np.ones((1, 2), dtype=bool)
    spatial = rng.normal(size=(1, 4, 2, 3))
    adjacency = np.tile(np.array([[0.0, 1.0], [1.0, 0.0]]), (1, 4, 1, 1))
    terms = total_loss(pred, gt, mask, spatial, adjacency, lambda_recon=0.5)
    recon = reconstruction_loss(spatial, adjacency).item()
    assert terms.recon == pytest.approx(recon)
    assert terms.total.item() == pytest.approx(terms.l2 + 0.5 * recon)


def test_total_loss_needs_adjacency(rng):
    with pytest.raises(ContractError):
        total_loss(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 2)), np.ones((1, 1), dtype=bool),
                   spatial=np.zeros((1, 3, 1, 2)), adjacency=None)


def _grads(params, scale):
    """Gradient of sum(scale * p) over every parameter."""
    with Tape() as tape:
        loss = None
        for tensor in params.tensors():
            term = F.sum(F.mul(tensor, scale))
            loss = term if loss is None else F.add(loss, term)
        return tape.backward(loss)


def test_sgd_step_without_clipping(small_model_config):
    params = init_params(small_model_config, 0)
    grads = _grads(params, 1e-4)
    updated, norm = sgd_step(params, grads, lr=0.5, clip_norm=10.0)
    assert norm == pytest.approx(1e-4 * np.sqrt(params.num_parameters))
    for name, tensor in params.items():
        np.testing.assert_allclose(updated[name].data, tensor.data - 0.5e-4)
    assert updated.names() == params.names()


def test_sgd_step_clips_global_norm(small_model_config):
    params = init_params(small_model_config, 0)
    grads = _grads(params, 100.0)
    updated, norm = sgd_step(params, grads, lr=1.0, clip_norm=1.0)
    assert norm > 1.0
    step = {name: tensor.data - updated[name].data for name, tensor in params.items()}
    total = np.sqrt(sum(float(np.sum(s ** 2)) for s in step.values()))
    assert total == pytest.approx(1.0)


def test_sgd_step_zero_lr_keeps_params(small_model_config):
    params = init_params(small_model_config, 0)
    updated, _ = sgd_step(params, _grads(params, 3.0), lr=0.0)
    for name, tensor in params.items():
        np.testing.assert_array_equal(updated[name].data, tensor.data)


def test_sgd_step_rejects_non_finite_gradients(small_model_config):
    params = init_params(small_model_config, 0)
    target = params["head.b2"]
    with Tape() as tape:
        grads = tape.backward(F.sum(F.mul(target, np.array([np.nan, 1.0]))))
    with pytest.raises(NumericalError) as excinfo:
        sgd_step(params, grads, lr=0.1)
    assert excinfo.value.diagnostics["parameters"] == ["head.b2"]
    assert excinfo.value.exit_code == 3


def test_global_norm_of_missing_gradients_is_zero(small_model_config):
    params = init_params(small_model_config, 0)
    with Tape() as tape:
        grads = tape.backward(F.sum(params["head.b2"]))
    assert global_norm(grads, params) == pytest.approx(np.sqrt(2.0))


def test_sgd_step_decreases_convex_quadratic(rng):
    curvature = np.array([1.0, 4.0, 9.0])
    target = rng.normal(size=3)
    params = ModelParams.from_arrays({"w": rng.normal(size=3)})

    def quadratic(p):
        diff = F.sub(p["w"], target)
        return F.mul(F.sum(F.mul(F.mul(diff, diff), curvature)), 0.5)

    with Tape() as tape:
        before = quadratic(params)
    grads = tape.backward(before)
    # lr below 2 / max curvature
    updated, _ = sgd_step(params, grads, lr=0.2, clip_norm=1e6)
    assert quadratic(updated).item() < before.item()
