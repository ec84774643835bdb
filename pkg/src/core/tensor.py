"""
Tensor and Computation Tape

Dense float64 tensors backed by numpy and a tape that records primitive
operations for reverse-mode differentiation.

Usage:
    w = Tensor(np.ones((2, 2)), requires_grad=True, name="w")
    with Tape() as tape:
        loss = F.sum(F.matmul(w, w))
    grads = tape.backward(loss)
    grads[w]  # dLoss/dw

Tensors are immutable values: the array behind a tensor is read-only.
Operations executed outside an active tape are not recorded.
"""

import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_state = threading.local()


def active_tape() -> Optional["Tape"]:
    """Tape recording on the current thread, if any."""
    return getattr(_state, "tape", None)


class Tensor:
    """
    Immutable float64 array with an optional gradient requirement.

    Attributes:
        data: Read-only numpy array (row-major)
        requires_grad: Whether gradients flow to/through this tensor
        name: Optional label used in diagnostics (parameter names)
    """

    __slots__ = ("data", "requires_grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.array(data, dtype=np.float64)
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._tape: Optional["Tape"] = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap an array produced by an operation without copying."""
        out = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        if arr.flags.writeable:
            arr.setflags(write=False)
        out.data = arr
        out.requires_grad = requires_grad
        out.name = None
        out._tape = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """Writable copy of the data."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def detach(self) -> "Tensor":
        """Same data, no gradient tracking."""
        return Tensor._wrap(self.data, requires_grad=False)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{grad}{label})"

    # Operator sugar delegates to the functional module.

    def __add__(self, other):
        from . import functional as F
        return F.add(self, other)

    def __radd__(self, other):
        from . import functional as F
        return F.add(other, self)

    def __sub__(self, other):
        from . import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from . import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from . import functional as F
        return F.mul(self, other)

    def __rmul__(self, other):
        from . import functional as F
        return F.mul(other, self)

    def __truediv__(self, other):
        from . import functional as F
        return F.div(self, other)

    def __neg__(self):
        from . import functional as F
        return F.neg(self)

    def __matmul__(self, other):
        from . import functional as F
        return F.matmul(self, other)

    def __getitem__(self, index):
        from . import functional as F
        return F.getitem(self, index)


@dataclass
class TapeEntry:
    """One recorded primitive: output = op(*inputs)."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn


class GradientMap:
    """
    Gradients keyed by tensor identity.

    Tensors that received no gradient read as zeros of their own shape.
    """

    def __init__(self):
        self._grads: Dict[int, np.ndarray] = {}
        self._tensors: Dict[int, Tensor] = {}

    def _accumulate(self, tensor: Tensor, grad: np.ndarray) -> None:
        key = id(tensor)
        if key in self._grads:
            self._grads[key] = self._grads[key] + grad
        else:
            self._grads[key] = np.zeros(tensor.shape) + grad
            self._tensors[key] = tensor

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        grad = self._grads.get(id(tensor))
        if grad is None:
            return np.zeros(tensor.shape)
        return grad

    def __contains__(self, tensor: Tensor) -> bool:
        return id(tensor) in self._grads

    def __len__(self) -> int:
        return len(self._grads)

    def items(self) -> Iterator[Tuple[Tensor, np.ndarray]]:
        for key, grad in self._grads.items():
            yield self._tensors[key], grad

    def scaled(self, factor: float) -> "GradientMap":
        out = GradientMap()
        for tensor, grad in self.items():
            out._accumulate(tensor, grad * factor)
        return out


class Tape:
    """
    Ordered record of primitive operations.

    Entries are appended as operations execute, so the list is always in
    topological order. Only operations with at least one input requiring
    gradients are recorded.
    """

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self._previous: Optional["Tape"] = None

    def __enter__(self) -> "Tape":
        self._previous = active_tape()
        _state.tape = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _state.tape = self._previous
        self._previous = None

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward_fn: BackwardFn) -> None:
        output._tape = self
        self.entries.append(TapeEntry(op, tuple(inputs), output, backward_fn))

    def backward(self, loss: Tensor) -> GradientMap:
        """
        Propagate dLoss/dx back through every recorded entry.

        Args:
            loss: Single-element tensor produced on this tape

        Returns:
            GradientMap with gradients of every tensor requiring grad that
            the loss depends on (leaves and intermediates)

        Raises:
            ContractError: If loss is not scalar or not produced on this tape
        """
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._tape is not self:
            raise ContractError("loss is not connected to this computation tape")

        grads = GradientMap()
        grads._accumulate(loss, np.ones(loss.shape))

        for entry in reversed(self.entries):
            if entry.output not in grads:
                continue
            upstream = grads[entry.output]
            input_grads = entry.backward_fn(upstream)
            for tensor, grad in zip(entry.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if np.shape(grad) != tensor.shape:
                    raise DimensionError(
                        f"{entry.op} produced gradient of shape {np.shape(grad)} "
                        f"for input of shape {tensor.shape}"
                    )
                grads._accumulate(tensor, grad)

        return grads


def record_op(op: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward_fn: BackwardFn) -> Tensor:
    """
    Wrap an operation result and record it on the active tape when needed.

    Args:
        op: Primitive name (diagnostics)
        inputs: Tensors the result depends on
        out_data: Forward result
        backward_fn: Maps upstream gradient to one gradient (or None) per input

    Returns:
        Result tensor; requires_grad iff a tape is active and any input requires grad
    """
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(out_data, requires_grad=needs_grad)
    if needs_grad:
        tape.record(op, inputs, out, backward_fn)
    return out


def backward(loss: Tensor) -> GradientMap:
    """Run reverse-mode differentiation on the tape that produced ``loss``."""
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._tape is None:
        raise ContractError("loss is not connected to a computation tape")
    return loss._tape.backward(loss)


def as_tensor(value) -> Tensor:
    """Tensors pass through; arrays and scalars become constants."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)
