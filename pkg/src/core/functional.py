"""
Differentiable primitives

Every function takes Tensors (arrays and scalars are promoted to constants),
computes the forward result with numpy, and records a backward closure on
the active tape.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError, DimensionError
from .tensor import Tensor, as_tensor, record_op

LAYER_NORM_EPS = 1e-5
ACTIVATIONS = ("relu", "sigmoid", "tanh", "prelu", "linear")


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# ========================================================================
# Elementwise arithmetic
# ========================================================================

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record_op("add", (a, b), a.data + b.data, backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record_op("sub", (a, b), a.data - b.data, backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record_op("mul", (a, b), a.data * b.data, backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    out = a.data / b.data

    def backward(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return record_op("div", (a, b), out, backward)


def neg(x) -> Tensor:
    x = as_tensor(x)
    return record_op("neg", (x,), -x.data, lambda g: (-g,))


def power(x, exponent: float) -> Tensor:
    x = as_tensor(x)

    def backward(g):
        return (g * exponent * x.data ** (exponent - 1),)

    return record_op("power", (x,), x.data ** exponent, backward)


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return record_op("exp", (x,), out, lambda g: (g * out,))


def log(x) -> Tensor:
    x = as_tensor(x)
    return record_op("log", (x,), np.log(x.data), lambda g: (g / x.data,))


# ========================================================================
# Linear algebra
# ========================================================================

def matmul(a, b) -> Tensor:
    """
    Matrix product a[..., m, k] @ b[..., k, n].

    Leading batch dimensions broadcast (e.g. a per-timestep adjacency stack
    against one weight matrix).

    Raises:
        DimensionError: If either operand is not at least 2-D or inner dims differ
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul batch dimensions differ: {a.shape} @ {b.shape}") from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return record_op("matmul", (a, b), np.matmul(a.data, b.data), backward)


def linear(x, weight, bias=None) -> Tensor:
    """Affine map x @ weight.T + bias with weight laid out [out × in]."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.shape[-1] != weight.shape[-1]:
        raise DimensionError(f"linear: input {x.shape} does not match weight {weight.shape}")
    squeeze = x.ndim == 1
    if squeeze:
        x = reshape(x, (1, x.shape[0]))
    out = matmul(x, transpose(weight))
    if bias is not None:
        out = add(out, bias)
    if squeeze:
        out = reshape(out, out.shape[1:])
    return out


# ========================================================================
# Reductions and shape manipulation
# ========================================================================

def sum(x, axis: Union[None, int, Tuple[int, ...]] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            axes = (axis,) if isinstance(axis, int) else axis
            axes = tuple(a % x.ndim for a in axes)
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return record_op("sum", (x,), out, backward)


def mean(x, axis: Union[None, int, Tuple[int, ...]] = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    return record_op("reshape", (x,), x.data.reshape(shape), lambda g: (g.reshape(x.shape),))


def transpose(x, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; default swaps the last two."""
    x = as_tensor(x)
    if axes is None:
        axes = tuple(range(x.ndim - 2)) + (x.ndim - 1, x.ndim - 2)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return record_op("transpose", (x,), np.transpose(x.data, axes), lambda g: (np.transpose(g, inverse),))


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        shapes = [t.shape for t in tensors]
        raise DimensionError(f"concat along axis {axis} failed for shapes {shapes}: {e}") from None
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return record_op("concat", tensors, out, backward)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as e:
        shapes = [t.shape for t in tensors]
        raise DimensionError(f"stack failed for shapes {shapes}: {e}") from None

    def backward(g):
        moved = np.moveaxis(g, axis, 0)
        return tuple(moved[i] for i in range(len(tensors)))

    return record_op("stack", tensors, out, backward)


def getitem(x, index) -> Tensor:
    """Basic indexing and slicing."""
    x = as_tensor(x)
    parts = index if isinstance(index, tuple) else (index,)
    basic = all(isinstance(p, (int, slice, type(Ellipsis))) or p is None for p in parts)

    def backward(g):
        grad = np.zeros(x.shape)
        if basic:
            grad[index] = g
        else:
            np.add.at(grad, index, g)
        return (grad,)

    return record_op("getitem", (x,), x.data[index], backward)


# ========================================================================
# Activations
# ========================================================================

def _sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def relu(x) -> Tensor:
    x = as_tensor(x)
    active = x.data > 0
    return record_op("relu", (x,), np.where(active, x.data, 0.0), lambda g: (g * active,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = _sigmoid(x.data)
    return record_op("sigmoid", (x,), out, lambda g: (g * out * (1.0 - out),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)
    return record_op("tanh", (x,), out, lambda g: (g * (1.0 - out * out),))


def prelu(x, alpha) -> Tensor:
    """x if x > 0 else alpha * x, with a learnable scalar slope."""
    x, alpha = as_tensor(x), as_tensor(alpha)
    if alpha.size != 1:
        raise DimensionError(f"prelu slope must be a scalar, got shape {alpha.shape}")
    slope = float(alpha.data.reshape(-1)[0])
    positive = x.data > 0

    def backward(g):
        gx = g * np.where(positive, 1.0, slope)
        galpha = np.sum(g * np.where(positive, 0.0, x.data))
        return gx, np.full(alpha.shape, galpha)

    return record_op("prelu", (x, alpha), np.where(positive, x.data, slope * x.data), backward)


def softplus(x) -> Tensor:
    """Numerically stable log(1 + exp(x))."""
    x = as_tensor(x)
    out = np.maximum(x.data, 0.0) + np.log1p(np.exp(-np.abs(x.data)))
    return record_op("softplus", (x,), out, lambda g: (g * _sigmoid(x.data),))


def activation(x, kind: str, alpha=None) -> Tensor:
    """
    Apply a named activation.

    Args:
        x: Input tensor
        kind: relu | sigmoid | tanh | prelu | linear
        alpha: Slope tensor (prelu only)

    Raises:
        ContractError: For an unknown kind or prelu without a slope
    """
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return tanh(x)
    if kind == "linear":
        return as_tensor(x)
    if kind == "prelu":
        if alpha is None:
            raise ContractError("prelu activation needs a slope")
        return prelu(x, alpha)
    raise ContractError(f"Unknown activation '{kind}', expected one of {ACTIVATIONS}")


# ========================================================================
# Normalisation and convolution
# ========================================================================

def layer_norm(x, gain, bias, axis: int = -1, eps: float = LAYER_NORM_EPS) -> Tensor:
    """
    (x - mean) / sqrt(var + eps) * gain + bias along one axis.

    Variance is the population variance. A constant slice normalises to zeros.
    """
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    axis = axis % x.ndim
    width = x.shape[axis]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match axis size {width}"
        )
    view = (width,) + (1,) * (x.ndim - axis - 1)
    g_b = gain.data.reshape(view)
    b_b = bias.data.reshape(view)

    centered = x.data - x.data.mean(axis=axis, keepdims=True)
    var = (centered * centered).mean(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv_std
    other_axes = tuple(i for i in range(x.ndim) if i != axis)

    def backward(g):
        d_hat = g * g_b
        gx = inv_std * (
            d_hat
            - d_hat.mean(axis=axis, keepdims=True)
            - x_hat * (d_hat * x_hat).mean(axis=axis, keepdims=True)
        )
        ggain = (g * x_hat).sum(axis=other_axes).reshape(gain.shape)
        gbias = g.sum(axis=other_axes).reshape(bias.shape)
        return gx, ggain, gbias

    return record_op("layer_norm", (x, gain, bias), x_hat * g_b + b_b, backward)


def conv1d_causal(x, kernel, bias) -> Tensor:
    """
    Length-preserving causal 1-D convolution over the last axis.

    Args:
        x: [..., C_in, T]
        kernel: [C_out, C_in, K]; tap K-1 weights the current step, tap 0 the oldest
        bias: [C_out]

    Returns:
        [..., C_out, T]; output at t depends only on inputs at times <= t

    Raises:
        DimensionError: On channel mismatch
        ContractError: If K < 1
    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    if kernel.ndim != 3 or x.ndim < 2:
        raise DimensionError(f"conv1d_causal: input {x.shape} / kernel {kernel.shape} not conv-shaped")
    c_out, c_in, k = kernel.shape
    if k < 1:
        raise ContractError("conv1d_causal needs kernel size >= 1")
    if x.shape[-2] != c_in:
        raise DimensionError(f"conv1d_causal: input channels {x.shape} do not match kernel {kernel.shape}")
    if bias.shape != (c_out,):
        raise DimensionError(f"conv1d_causal: bias {bias.shape} does not match kernel {kernel.shape}")

    lead = x.shape[:-2]
    steps = x.shape[-1]
    flat = x.data.reshape(-1, c_in, steps)
    padded = np.concatenate([np.zeros((flat.shape[0], c_in, k - 1)), flat], axis=-1)
    # windows[b, c, t, j] = padded[b, c, t + j]
    windows = np.stack([padded[:, :, j:j + steps] for j in range(k)], axis=-1)
    out = np.tensordot(windows, kernel.data, axes=([1, 3], [1, 2]))  # [b, t, o]
    out = np.transpose(out, (0, 2, 1)) + bias.data[:, None]

    def backward(g):
        g_flat = g.reshape(-1, c_out, steps)
        gkernel = np.tensordot(g_flat, windows, axes=([0, 2], [0, 2]))  # [o, c, k]
        gwin = np.tensordot(g_flat, kernel.data, axes=([1], [0]))  # [b, t, c, k]
        gpad = np.zeros_like(padded)
        for j in range(k):
            gpad[:, :, j:j + steps] += np.transpose(gwin[..., j], (0, 2, 1))
        gx = gpad[:, :, k - 1:].reshape(x.shape)
        gbias = g_flat.sum(axis=(0, 2))
        return gx, gkernel, gbias

    return record_op("conv1d_causal", (x, kernel, bias), out.reshape(lead + (c_out, steps)), backward)
