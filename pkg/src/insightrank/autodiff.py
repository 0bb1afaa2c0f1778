"""Minimal dense-matrix reverse-mode autodiff with an Adam optimizer.

Tensors are 2-D float64 arrays.  Operations executed while a ``Tape`` is
active record backward closures; ``Tape.backward`` replays them in reverse
order and returns a gradient map for every tensor that requires gradients.
Without an active tape the same operations run forward-only, which is how
inference works.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeError, InsightRankError

__all__ = [
    "Tensor",
    "Tape",
    "AdamState",
    "adam_step",
    "add",
    "sub",
    "mul",
    "scale",
    "matmul",
    "tanh",
    "sigmoid",
    "softmax",
    "sum_all",
    "concat_rows",
    "transpose",
    "conv1d_encode",
    "finite_difference_grad",
    "save_params",
    "load_params",
]

CHECKPOINT_VERSION = 1


class Tensor:
    """A 2-D float64 array node.  1-D input becomes a column vector."""

    __slots__ = ("data", "requires_grad", "_tracked")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are rank <= 2, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self._tracked = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


_TAPE_STACK: list["Tape"] = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """Ordered record of operations, replayed in reverse by ``backward``."""

    def __init__(self):
        self._nodes = []
        self._grads: dict[int, np.ndarray] = {}
        self._tensors: dict[int, Tensor] = {}
        self._used = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        _TAPE_STACK.pop()
        return False

    def _ensure(self, t: Tensor) -> np.ndarray:
        key = id(t)
        grad = self._grads.get(key)
        if grad is None:
            grad = np.zeros_like(t.data)
            self._grads[key] = grad
            self._tensors[key] = t
        return grad

    def grad_of(self, t: Tensor) -> np.ndarray:
        return self._ensure(t)

    def backward(self, loss: Tensor, params=None) -> dict[Tensor, np.ndarray]:
        """Accumulate d(loss)/d(t) for every gradient-requiring tensor.

        ``params`` optionally lists tensors that must appear in the result
        even when unused by the graph (their gradient is zero).
        """
        if self._used:
            raise InsightRankError("backward called twice on the same tape")
        if loss.shape != (1, 1):
            raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
        self._used = True
        self._ensure(loss)[...] = 1.0
        for fn in reversed(self._nodes):
            fn(self)
        out = {
            t: self._grads[key]
            for key, t in self._tensors.items()
            if t.requires_grad
        }
        if params is not None:
            for t in params:
                if t.requires_grad and t not in out:
                    out[t] = np.zeros_like(t.data)
        return out


def _record(out: Tensor, inputs, backward_fn) -> Tensor:
    tape = _active_tape()
    if tape is None or not any(t._tracked for t in inputs):
        return out
    out._tracked = True
    tape._ensure(out)
    tape._nodes.append(backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    if grad.shape == shape:
        return grad
    out = grad
    if shape[0] == 1 and grad.shape[0] != 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        out = out.sum(axis=1, keepdims=True)
    return out


def _check_broadcast(a: Tensor, b: Tensor, op: str):
    sa, sb = a.shape, b.shape
    ok = all(x == y or x == 1 or y == 1 for x, y in zip(sa, sb))
    if not ok:
        raise ShapeError(f"{op}: incompatible shapes {sa} and {sb}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")
    out = Tensor(a.data + b.data)

    def bwd(tape, a=a, b=b, out=out):
        g = tape.grad_of(out)
        if a._tracked:
            tape.grad_of(a)[...] += _unbroadcast(g, a.shape)
        if b._tracked:
            tape.grad_of(b)[...] += _unbroadcast(g, b.shape)

    return _record(out, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "sub")
    out = Tensor(a.data - b.data)

    def bwd(tape, a=a, b=b, out=out):
        g = tape.grad_of(out)
        if a._tracked:
            tape.grad_of(a)[...] += _unbroadcast(g, a.shape)
        if b._tracked:
            tape.grad_of(b)[...] -= _unbroadcast(g, b.shape)

    return _record(out, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(a.data * b.data)

    def bwd(tape, a=a, b=b, out=out):
        g = tape.grad_of(out)
        if a._tracked:
            tape.grad_of(a)[...] += g * b.data
        if b._tracked:
            tape.grad_of(b)[...] += g * a.data

    return _record(out, (a, b), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)

    def bwd(tape, a=a, out=out, c=c):
        if a._tracked:
            tape.grad_of(a)[...] += tape.grad_of(out) * c

    return _record(out, (a,), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(a.data @ b.data)

    def bwd(tape, a=a, b=b, out=out):
        g = tape.grad_of(out)
        if a._tracked:
            tape.grad_of(a)[...] += g @ b.data.T
        if b._tracked:
            tape.grad_of(b)[...] += a.data.T @ g

    return _record(out, (a, b), bwd)


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data))

    def bwd(tape, a=a, out=out):
        if a._tracked:
            tape.grad_of(a)[...] += tape.grad_of(out) * (1.0 - out.data**2)

    return _record(out, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    out = Tensor(1.0 / (1.0 + np.exp(-a.data)))

    def bwd(tape, a=a, out=out):
        if a._tracked:
            tape.grad_of(a)[...] += tape.grad_of(out) * out.data * (1.0 - out.data)

    return _record(out, (a,), bwd)


def softmax(a: Tensor) -> Tensor:
    """Row-wise softmax, stabilized by max subtraction."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = Tensor(e / e.sum(axis=1, keepdims=True))

    def bwd(tape, a=a, out=out):
        if a._tracked:
            g = tape.grad_of(out)
            y = out.data
            dot = (g * y).sum(axis=1, keepdims=True)
            tape.grad_of(a)[...] += y * (g - dot)

    return _record(out, (a,), bwd)


def sum_all(a: Tensor) -> Tensor:
    out = Tensor([[a.data.sum()]])

    def bwd(tape, a=a, out=out):
        if a._tracked:
            tape.grad_of(a)[...] += tape.grad_of(out)[0, 0]

    return _record(out, (a,), bwd)


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T.copy())

    def bwd(tape, a=a, out=out):
        if a._tracked:
            tape.grad_of(a)[...] += tape.grad_of(out).T

    return _record(out, (a,), bwd)


def concat_rows(tensors) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat_rows of an empty list")
    width = tensors[0].shape[1]
    for t in tensors:
        if t.shape[1] != width:
            raise ShapeError(
                f"concat_rows: widths differ ({t.shape} vs (*, {width}))"
            )
    out = Tensor(np.concatenate([t.data for t in tensors], axis=0))

    def bwd(tape, tensors=tensors, out=out):
        g = tape.grad_of(out)
        row = 0
        for t in tensors:
            n = t.shape[0]
            if t._tracked:
                tape.grad_of(t)[...] += g[row : row + n]
            row += n

    return _record(out, tuple(tensors), bwd)


def conv1d_encode(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """tanh 1-D convolution of x by each filter row of w, max-pooled.

    x: (L, 1) input sequence, w: (F, r) filters, b: (F, 1) biases.
    Returns the (F, 1) vector of pooled activations.
    """
    L = x.shape[0]
    F, r = w.shape
    if b.shape != (F, 1):
        raise ShapeError(f"conv1d_encode: bias shape {b.shape}, expected ({F}, 1)")
    if L < r:
        raise ShapeError(f"conv1d_encode: sequence length {L} < window {r}")
    xf = np.ascontiguousarray(x.data[:, 0])
    bf = np.ascontiguousarray(b.data[:, 0])
    pooled, arg, _ = kernels.conv1d_pool_forward(xf, w.data, bf)
    out = Tensor(pooled.reshape(-1, 1))

    def bwd(tape, x=x, w=w, b=b, out=out, xf=xf, bf=bf, pooled=pooled, arg=arg):
        g = tape.grad_of(out)[:, 0]
        dx, dw, db = kernels.conv1d_pool_backward(xf, w.data, bf, arg, pooled, g)
        if x._tracked:
            tape.grad_of(x)[...] += dx.reshape(-1, 1)
        if w._tracked:
            tape.grad_of(w)[...] += dw
        if b._tracked:
            tape.grad_of(b)[...] += db.reshape(-1, 1)

    return _record(out, (x, w, b), bwd)


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, Tensor],
    grads: dict[Tensor, np.ndarray],
    state: AdamState,
) -> None:
    """One Adam update over the named parameters, in place.

    Parameters missing from the gradient map receive a zero gradient.
    """
    state.step += 1
    for name, t in params.items():
        g = grads.get(t)
        if g is None:
            g = np.zeros_like(t.data)
        if g.shape != t.data.shape:
            raise ShapeError(
                f"adam_step: gradient shape {g.shape} != parameter "
                f"shape {t.data.shape} for {name!r}"
            )
        if name not in state.m:
            state.m[name] = np.zeros_like(t.data)
            state.v[name] = np.zeros_like(t.data)
        # The kernel works on flat views; reshape(-1) aliases the storage.
        kernels.adam_update(
            t.data.reshape(-1),
            g.reshape(-1),
            state.m[name].reshape(-1),
            state.v[name].reshape(-1),
            state.lr,
            state.beta1,
            state.beta2,
            state.eps,
            state.step,
        )


def finite_difference_grad(f, tensor: Tensor, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar-valued f w.r.t. one tensor."""
    grad = np.zeros_like(tensor.data)
    it = np.nditer(tensor.data, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = tensor.data[idx]
        tensor.data[idx] = orig + step
        hi = f()
        tensor.data[idx] = orig - step
        lo = f()
        tensor.data[idx] = orig
        grad[idx] = (hi - lo) / (2.0 * step)
    return grad


def save_params(params: dict[str, Tensor], path) -> None:
    """Bit-exact checkpoint: parameter name -> float64 array, plus a version."""
    arrays = {f"param/{name}": t.data for name, t in params.items()}
    arrays["__version__"] = np.array([CHECKPOINT_VERSION], dtype=np.int64)
    np.savez(path, **arrays)


def load_params(path) -> dict[str, Tensor]:
    with np.load(path) as npz:
        version = int(npz["__version__"][0])
        if version != CHECKPOINT_VERSION:
            raise InsightRankError(f"unsupported checkpoint version {version}")
        out = {}
        for key in npz.files:
            if key.startswith("param/"):
                out[key[len("param/") :]] = Tensor(npz[key].copy(), requires_grad=True)
    return out
