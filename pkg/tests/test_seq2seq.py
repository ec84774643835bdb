"""
Unit tests for the LSTM encoder-decoder, graph reconstruction loss and the
assembled forecaster.
"""

import numpy as np
import pytest

from src.core import functional as F
from src.core.errors import ContractError
from src.core.gradcheck import grad_check_report
from src.core.graph_builder import padded_snapshot_stack
from src.core.model import TrajectoryForecaster
from src.core.params import LstmWeights, ModelParams, init_params
from src.core.seq2seq import decode, encode, link_prob, lstm_cell, output_proj, reconstruction_loss
from src.core.tensor import Tensor
from src.models.config import ModelConfig

from tests import oracles


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _lstm_weights(rng, d_in=3, hidden=4):
    return LstmWeights(
        Tensor(rng.normal(size=(4 * hidden, d_in)), requires_grad=True, name="w_ih"),
        Tensor(rng.normal(size=(4 * hidden, hidden)), requires_grad=True, name="w_hh"),
        Tensor(rng.normal(size=4 * hidden), requires_grad=True, name="bias"),
    )


def test_lstm_cell_matches_reference(rng):
    w = _lstm_weights(rng)
    h, c, x = rng.normal(size=(2, 4)), rng.normal(size=(2, 4)), rng.normal(size=(2, 3))
    gates = x @ w.w_ih.data.T + h @ w.w_hh.data.T + w.bias.data
    i, f, g, o = np.split(gates, 4, axis=-1)
    c_ref = _sigmoid(f) * c + _sigmoid(i) * np.tanh(g)
    h_ref = _sigmoid(o) * np.tanh(c_ref)
    h_new, c_new = lstm_cell(h, c, x, w)
    np.testing.assert_allclose(c_new.data, c_ref, atol=1e-12)
    np.testing.assert_allclose(h_new.data, h_ref, atol=1e-12)


def test_lstm_rows_are_independent(rng):
    w = _lstm_weights(rng)
    h, c, x = rng.normal(size=(3, 4)), rng.normal(size=(3, 4)), rng.normal(size=(3, 3))
    together = lstm_cell(h, c, x, w)[0].data
    alone = lstm_cell(h[1:2], c[1:2], x[1:2], w)[0].data
    np.testing.assert_allclose(together[1:2], alone, atol=1e-12)


def test_output_proj(rng):
    h, w, b = rng.normal(size=(2, 4)), rng.normal(size=(2, 4)), rng.normal(size=2)
    np.testing.assert_allclose(output_proj(h, w, b).data, h @ w.T + b, atol=1e-12)


def test_encode_returns_final_state(rng):
    w = _lstm_weights(rng)
    features = rng.normal(size=(1, 2, 5, 3))
    h, c = encode(features, w)
    assert h.shape == (1, 2, 4)
    h_ref, c_ref = np.zeros((1, 2, 4)), np.zeros((1, 2, 4))
    for t in range(5):
        h_ref, c_ref = (v.data for v in lstm_cell(h_ref, c_ref, features[:, :, t], w))
    np.testing.assert_allclose(h.data, h_ref, atol=1e-12)


def _decoder_setup(small_model_config, rng):
    params = ModelParams.from_arrays({
        n: t.data + rng.normal(0, 0.1, size=t.shape) for n, t in init_params(small_model_config).items()
    })
    h_enc = rng.normal(size=(2, small_model_config.encoder_hidden))
    c_enc = rng.normal(size=(2, small_model_config.encoder_hidden))
    last = rng.normal(size=(2, 2))
    b_st = rng.normal(size=(2, small_model_config.feature_dim))
    return params, h_enc, c_enc, last, b_st


def test_decode_shape_and_validation(small_model_config, rng):
    params, h_enc, c_enc, last, b_st = _decoder_setup(small_model_config, rng)
    out = decode(h_enc, c_enc, last, b_st, 5, params.decoder())
    assert out.shape == (2, 5, 2)
    with pytest.raises(ContractError):
        decode(h_enc, c_enc, last, b_st, 0, params.decoder())
    with pytest.raises(ContractError):
        decode(h_enc, c_enc, last, b_st, 3, params.decoder(), mode="teacher_forcing")


def test_teacher_forcing_feeds_ground_truth(small_model_config, rng):
    params, h_enc, c_enc, last, b_st = _decoder_setup(small_model_config, rng)
    gt = rng.normal(size=(2, 4, 2))
    other = gt + 1.0
    forced = decode(h_enc, c_enc, last, b_st, 4, params.decoder(), "teacher_forcing", gt).data
    shifted = decode(h_enc, c_enc, last, b_st, 4, params.decoder(), "teacher_forcing", other).data
    free = decode(h_enc, c_enc, last, b_st, 4, params.decoder()).data
    # first step only sees the last observation
    np.testing.assert_allclose(forced[:, 0], free[:, 0], atol=1e-12)
    np.testing.assert_allclose(forced[:, 0], shifted[:, 0], atol=1e-12)
    assert not np.allclose(forced[:, 1:], shifted[:, 1:])


def test_teacher_forcing_replays_free_running(small_model_config, rng):
    params, h_enc, c_enc, last, b_st = _decoder_setup(small_model_config, rng)
    for residual in (False, True):
        free = decode(h_enc, c_enc, last, b_st, 6, params.decoder(), residual=residual).data
        replay = decode(h_enc, c_enc, last, b_st, 6, params.decoder(), "teacher_forcing", free,
                        residual=residual).data
        np.testing.assert_array_equal(replay, free)


def test_residual_head_moves_from_previous_position(small_model_config, rng):
    params, h_enc, c_enc, last, b_st = _decoder_setup(small_model_config, rng)
    arrays = {name: tensor.data for name, tensor in params.items()}
    arrays["head.w2"] = np.zeros_like(arrays["head.w2"])
    arrays["head.b2"] = np.array([0.4, -0.1])
    still = ModelParams.from_arrays(arrays)
    absolute = decode(h_enc, c_enc, last, b_st, 3, still.decoder()).data
    stepped = decode(h_enc, c_enc, last, b_st, 3, still.decoder(), residual=True).data
    np.testing.assert_allclose(absolute, np.broadcast_to([0.4, -0.1], (2, 3, 2)), atol=1e-12)
    expected = last[:, None, :] + np.arange(1, 4)[None, :, None] * np.array([0.4, -0.1])
    np.testing.assert_allclose(stepped, expected, atol=1e-12)


def test_link_prob():
    assert link_prob(np.zeros(3), np.ones(3)) == pytest.approx(0.5)
    assert link_prob(np.array([10.0]), np.array([10.0])) == pytest.approx(1.0)


def test_reconstruction_loss_matches_oracle(rng):
    h = rng.normal(size=(4, 3))
    adjacency = np.array([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]], dtype=float)
    assert reconstruction_loss(h, adjacency).item() == pytest.approx(oracles.reconstruction_bce(h, adjacency), rel=1e-10)


def test_reconstruction_loss_is_stable_for_large_logits():
    h = np.array([[100.0, 0.0], [-100.0, 0.0]])
    loss = reconstruction_loss(h, np.zeros((2, 2))).item()
    assert np.isfinite(loss)


def test_reconstruction_loss_padding_is_ignored(rng):
    h = rng.normal(size=(3, 2))
    adjacency = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    plain = reconstruction_loss(h, adjacency).item()

    padded_h = np.vstack([h, rng.normal(size=(2, 2))])
    padded_a = np.zeros((5, 5))
    padded_a[:3, :3] = adjacency
    mask = np.array([True, True, True, False, False])
    assert reconstruction_loss(padded_h, padded_a, mask).item() == pytest.approx(plain, rel=1e-12)


def test_reconstruction_loss_gradient(rng):
    h = Tensor(rng.normal(size=(2, 3, 4, 2)), requires_grad=True, name="h")
    adjacency = np.tile(np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float), (2, 3, 1, 1))
    report = grad_check_report(lambda: reconstruction_loss(h, adjacency), [h])
    assert report.passed, report.to_dict()


def _batch(rng, nodes=3, t_obs=4):
    obs = np.cumsum(rng.normal(0, 0.3, size=(1, nodes, t_obs, 2)), axis=2)
    mask = np.ones((1, nodes), dtype=bool)
    adjacency, a_norm = padded_snapshot_stack(obs[0], mask[0])
    return obs, mask, adjacency[None], a_norm[None]


def test_forecaster_forward_shapes(small_model_config, rng):
    model = TrajectoryForecaster(small_model_config)
    params = model.init_params(0)
    obs, mask, _, a_norm = _batch(rng)
    out = model.forward(params, obs, a_norm, mask, t_pred=6)
    assert out.pred.shape == (1, 3, 6, 2)
    assert out.spatial.shape == (1, 4, 3, small_model_config.gcn_out)
    assert out.features.shape == (1, 3, 4, small_model_config.feature_dim)


def test_forecaster_is_permutation_equivariant(small_model_config, rng):
    model = TrajectoryForecaster(small_model_config)
    params = model.init_params(1)
    obs, mask, _, a_norm = _batch(rng, nodes=4)
    perm = np.array([2, 0, 3, 1])
    base = model.predict(params, obs, a_norm, mask, 3)
    moved = model.predict(params, obs[:, perm], a_norm[:, :, perm][:, :, :, perm], mask[:, perm], 3)
    np.testing.assert_allclose(moved, base[:, perm], atol=1e-10)


def test_forecaster_with_two_blocks(rng):
    config = ModelConfig(n_blocks=2, tcn_hidden=4, gcn_hidden=4, gcn_out=3, tcn_out=3,
                         encoder_hidden=4, decoder_hidden=4, embedding_dim=2, head_hidden=3)
    model = TrajectoryForecaster(config)
    obs, mask, _, a_norm = _batch(rng)
    out = model.forward(model.init_params(0), obs, a_norm, mask, 2)
    assert out.pred.shape == (1, 3, 2, 2)


@pytest.mark.parametrize("residual", [False, True])
def test_decoder_gradients(small_model_config, rng, residual):
    params, h_enc, c_enc, last, b_st = _decoder_setup(small_model_config, rng)
    names = [n for n in params.names() if not n.startswith(("block0.", "encoder."))]
    weights = rng.normal(size=(2, 3, 2))
    def loss():
        return F.sum(F.mul(decode(h_enc, c_enc, last, b_st, 3, params.decoder(), residual=residual), weights))

    report = grad_check_report(
        loss,
        [params[n] for n in names],
        names=names,
    )
    assert report.passed, report.to_dict()
