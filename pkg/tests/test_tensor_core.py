"""
Unit tests for the autodiff tensor core and differentiable primitives.
"""

import numpy as np
import pytest

from src.core import functional as F
from src.core.errors import ContractError, DimensionError
from src.core.gradcheck import grad_check
from src.core.tensor import Tape, Tensor, backward

from tests import oracles


def test_tensor_data_is_read_only():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_tensor_copies_input():
    source = np.array([1.0, 2.0])
    t = Tensor(source)
    source[0] = 9.0
    assert t.data[0] == 1.0


def test_broadcast_add_gradient_is_summed():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.zeros(3), requires_grad=True)
    with Tape() as tape:
        loss = F.sum(F.add(a, b))
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[a], np.ones((2, 3)))
    np.testing.assert_array_equal(grads[b], [2.0, 2.0, 2.0])


def test_reused_tensor_accumulates_gradient():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    with Tape() as tape:
        loss = F.sum(F.mul(x, x))
    np.testing.assert_allclose(tape.backward(loss)[x], [2.0, -4.0, 6.0])


def test_matmul_matches_loop_oracle(rng):
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 2))
    np.testing.assert_allclose(F.matmul(a, b).data, oracles.matmul(a, b), atol=1e-12)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(DimensionError) as excinfo:
        F.matmul(np.ones((2, 3)), np.ones((4, 5)))
    assert "(2, 3)" in str(excinfo.value)
    assert "(4, 5)" in str(excinfo.value)


def test_backward_requires_scalar_loss():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = F.mul(x, 2.0)
    with pytest.raises(ContractError):
        tape.backward(y)


def test_backward_is_linear_in_the_loss(rng):
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    with Tape() as tape:
        loss = F.sum(F.tanh(F.matmul(a, b)))
    grads = tape.backward(loss)
    with Tape() as tape:
        scaled = F.mul(F.sum(F.tanh(F.matmul(a, b))), 3.0)
    scaled_grads = tape.backward(scaled)
    for t in (a, b):
        np.testing.assert_allclose(scaled_grads[t], 3.0 * grads[t], rtol=1e-12, atol=1e-15)


def test_backward_without_tape_is_rejected():
    x = Tensor([1.0, 2.0], requires_grad=True)
    loss = F.sum(x)
    with pytest.raises(ContractError):
        backward(loss)


def test_no_recording_outside_tape():
    x = Tensor([1.0], requires_grad=True)
    y = F.mul(x, 3.0)
    assert not y.requires_grad


def test_unused_parameter_has_zero_gradient():
    x = Tensor([1.0, 2.0], requires_grad=True)
    unused = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        loss = F.sum(x)
    np.testing.assert_array_equal(tape.backward(loss)[unused], np.zeros((2, 2)))


def test_advanced_index_gradient_accumulates():
    x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with Tape() as tape:
        loss = F.sum(x[np.array([0, 0, 1])])
    np.testing.assert_array_equal(tape.backward(loss)[x], [2.0, 1.0, 0.0])


def test_causal_conv_matches_oracle(rng):
    x = rng.normal(size=(3, 7))
    kernel = rng.normal(size=(2, 3, 3))
    bias = rng.normal(size=2)
    out = F.conv1d_causal(x, kernel, bias)
    np.testing.assert_allclose(out.data, oracles.causal_conv(x, kernel, bias), atol=1e-12)


def test_causal_conv_does_not_see_the_future(rng):
    x = rng.normal(size=(1, 2, 10))
    kernel = rng.normal(size=(3, 2, 3))
    bias = np.zeros(3)
    changed = x.copy()
    changed[..., 6:] += 5.0
    before = F.conv1d_causal(x, kernel, bias).data
    after = F.conv1d_causal(changed, kernel, bias).data
    np.testing.assert_array_equal(before[..., :6], after[..., :6])
    assert not np.allclose(before[..., 6:], after[..., 6:])


def test_causal_conv_kernel_one_is_pointwise(rng):
    x = rng.normal(size=(2, 5))
    kernel = rng.normal(size=(4, 2, 1))
    out = F.conv1d_causal(x, kernel, np.zeros(4))
    np.testing.assert_allclose(out.data, kernel[:, :, 0] @ x, atol=1e-12)


def test_causal_conv_rejects_empty_kernel():
    with pytest.raises(ContractError):
        F.conv1d_causal(np.ones((2, 4)), np.zeros((3, 2, 0)), np.zeros(3))


def test_causal_conv_channel_mismatch():
    with pytest.raises(DimensionError):
        F.conv1d_causal(np.ones((2, 4)), np.zeros((3, 5, 2)), np.zeros(3))


def test_layer_norm_statistics(rng):
    x = rng.normal(3.0, 2.0, size=(4, 16))
    out = F.layer_norm(x, np.ones(16), np.zeros(16)).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-9)
    # eps sits inside the square root, so the variance is var / (var + eps)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-4)


def test_layer_norm_constant_input_maps_to_bias():
    out = F.layer_norm(np.full((2, 4), 7.0), np.ones(4), np.full(4, 0.5)).data
    np.testing.assert_allclose(out, 0.5)


def test_softplus_is_stable():
    out = F.softplus(np.array([-1000.0, 0.0, 1000.0])).data
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, [0.0, np.log(2.0), 1000.0])


def test_sigmoid_is_stable():
    out = F.sigmoid(np.array([-1000.0, 1000.0])).data
    np.testing.assert_array_equal(out, [0.0, 1.0])


def test_prelu_requires_scalar_slope():
    with pytest.raises(DimensionError):
        F.prelu(np.ones(3), np.ones(2))


def test_activation_rejects_unknown_kind():
    with pytest.raises(ContractError):
        F.activation(np.ones(2), "swish")


@pytest.mark.parametrize("op", ["tanh", "sigmoid", "softplus", "exp"])
def test_elementwise_gradients(op, rng):
    x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    fn = getattr(F, op)
    assert grad_check(lambda: F.sum(F.mul(fn(x), x)), [x]) < 1e-6


def test_prelu_gradient(rng):
    x = Tensor(rng.normal(size=(5, 4)) + 0.05, requires_grad=True)
    alpha = Tensor([0.25], requires_grad=True)
    weights = rng.normal(size=(5, 4))
    assert grad_check(lambda: F.sum(F.mul(F.prelu(x, alpha), weights)), [x, alpha]) < 1e-6


def test_linear_and_matmul_gradients(rng):
    x = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
    w = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=5), requires_grad=True)
    assert grad_check(lambda: F.sum(F.tanh(F.linear(x, w, b))), [x, w, b]) < 1e-6


def test_layer_norm_gradient(rng):
    x = Tensor(rng.normal(size=(3, 6, 2)), requires_grad=True)
    gain = Tensor(rng.normal(size=6), requires_grad=True)
    bias = Tensor(rng.normal(size=6), requires_grad=True)
    weights = rng.normal(size=(3, 6, 2))
    loss = lambda: F.sum(F.mul(F.layer_norm(x, gain, bias, axis=1), weights))  # noqa: E731
    assert grad_check(loss, [x, gain, bias]) < 1e-6


def test_conv_gradient(rng):
    x = Tensor(rng.normal(size=(2, 3, 6)), requires_grad=True)
    kernel = Tensor(rng.normal(size=(4, 3, 3)), requires_grad=True)
    bias = Tensor(rng.normal(size=4), requires_grad=True)
    weights = rng.normal(size=(2, 4, 6))
    loss = lambda: F.sum(F.mul(F.conv1d_causal(x, kernel, bias), weights))  # noqa: E731
    assert grad_check(loss, [x, kernel, bias]) < 1e-6


def test_shape_ops_gradients(rng):
    x = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
    y = Tensor(rng.normal(size=(2, 3, 1)), requires_grad=True)
    weights = rng.normal(size=(3, 2, 5))

    def loss():
        joined = F.concat([x, y], axis=-1)
        moved = F.transpose(joined, (1, 0, 2))
        stacked = F.stack([moved[:, 0], moved[:, 1]], axis=1)
        return F.sum(F.mul(F.reshape(stacked, (3, 2, 5)), weights))

    assert grad_check(loss, [x, y]) < 1e-6
