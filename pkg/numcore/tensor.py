"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation returns a new Tensor. When any input requires a gradient the
result remembers its parents and a backward function mapping the output
gradient to one gradient per parent; `backward` replays those functions in
reverse topological order and accumulates into the leaves' `.grad`.
"""

from __future__ import annotations

import contextlib
import itertools
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError, NonFiniteError, ShapeError, VocabIndexError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
TensorLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]

_node_ids = itertools.count()
_grad_enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording of the computation graph (inference, decoding)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


def check_finite(values: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"Non-finite value detected in {where}")


class Tensor:
    """A float64 array plus, for recorded results, a link into the graph."""

    __array_priority__ = 100.0

    def __init__(self, values: TensorLike, requires_grad: bool = False, name: Optional[str] = None) -> None:
        array = np.array(values, dtype=np.float64)
        check_finite(array, name or "tensor construction")
        self.values: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.node_id = next(_node_ids)
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None

    # ---- introspection ----
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.values.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.values)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # ---- operators ----
    def __add__(self, other: TensorLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: TensorLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: TensorLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: TensorLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: TensorLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: TensorLike) -> "Tensor":
        return mul(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)


def as_tensor(value: TensorLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def make_node(values: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op result, recording the graph edge when gradients are needed."""
    check_finite(values, op)
    out = Tensor.__new__(Tensor)
    out.values = values
    out.grad = None
    out.name = None
    out.node_id = next(_node_ids)
    out._parents = ()
    out._backward = None
    out.requires_grad = False
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.node_id in visited:
            continue
        visited.add(node.node_id)
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and parent.node_id not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every trainable leaf reachable from loss."""
    if loss.values.ndim != 0:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss is not connected to any trainable tensor")
    grads = {loss.node_id: np.ones_like(loss.values)}
    for node in reversed(_topological_order(loss)):
        grad = grads.pop(node.node_id, None)
        if grad is None:
            continue
        if node._backward is None:
            check_finite(grad, f"gradient of {node.name or 'leaf'}")
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent.node_id in grads:
                grads[parent.node_id] = grads[parent.node_id] + parent_grad
            else:
                grads[parent.node_id] = parent_grad


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"{op}: operands do not broadcast", a.shape, b.shape) from exc


# ---- elementwise ----

def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def _back(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_node(a.values + b.values, (a, b), _back, "add")


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def _back(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_node(a.values - b.values, (a, b), _back, "sub")


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def _back(g: np.ndarray):
        return _unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)

    return make_node(a.values * b.values, (a, b), _back, "mul")


def neg(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    return make_node(-a.values, (a,), lambda g: (-g,), "neg")


def tanh(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.values)
    return make_node(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def sigmoid(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    y = 0.5 * (1.0 + np.tanh(0.5 * a.values))
    return make_node(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def exp(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.values)
    return make_node(y, (a,), lambda g: (g * y,), "exp")


def log(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    if np.any(a.values <= 0.0):
        raise NonFiniteError("log of a non-positive value")
    x = a.values
    return make_node(np.log(x), (a,), lambda g: (g / x,), "log")


def square(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    x = a.values
    return make_node(x * x, (a,), lambda g: (2.0 * g * x,), "square")


# ---- linear algebra ----

def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    """c = a @ b for matrices a (m x k) and b (k x n)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul: inner dimensions do not agree", a.shape, b.shape)

    def _back(g: np.ndarray):
        return g @ b.values.T, a.values.T @ g

    return make_node(a.values @ b.values, (a, b), _back, "matmul")


# ---- reductions and reshaping ----

def sum_(a: TensorLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def _back(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return make_node(np.asarray(a.values.sum(axis=axis, keepdims=keepdims)), (a,), _back, "sum")


def mean(a: TensorLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a: TensorLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    original = a.shape
    try:
        values = a.values.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError("reshape: incompatible extents", original, tuple(shape)) from exc
    return make_node(values, (a,), lambda g: (g.reshape(original),), "reshape")


def concat(tensors: Sequence[TensorLike], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat: nothing to concatenate")
    try:
        values = np.concatenate([p.values for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError("concat: extents disagree", *[p.shape for p in parts]) from exc
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def _back(g: np.ndarray):
        return np.split(g, bounds, axis=axis)

    return make_node(values, parts, _back, "concat")


def stack(tensors: Sequence[TensorLike], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("stack: nothing to stack")
    try:
        values = np.stack([p.values for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError("stack: extents disagree", *[p.shape for p in parts]) from exc

    def _back(g: np.ndarray):
        return [np.take(g, i, axis=axis) for i in range(len(parts))]

    return make_node(values, parts, _back, "stack")


def slice_axis(a: TensorLike, start: int, stop: int, axis: int = -1) -> Tensor:
    """a[..., start:stop, ...] along one axis."""
    a = as_tensor(a)
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    key = tuple(index)
    shape = a.shape

    def _back(g: np.ndarray):
        full = np.zeros(shape)
        full[key] = g
        return (full,)

    return make_node(a.values[key].copy(), (a,), _back, "slice")


def select(a: TensorLike, position: int, axis: int = 0) -> Tensor:
    """Pick one position along an axis, dropping that axis."""
    a = as_tensor(a)
    index = [slice(None)] * a.ndim
    index[axis] = position
    key = tuple(index)
    shape = a.shape

    def _back(g: np.ndarray):
        full = np.zeros(shape)
        full[key] = g
        return (full,)

    return make_node(a.values[key].copy(), (a,), _back, "select")


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup table[ids]; the gradient is scattered back into the table."""
    ids = np.asarray(ids)
    if ids.size and not np.issubdtype(ids.dtype, np.integer):
        raise VocabIndexError(f"embedding ids must be integers, got {ids.dtype}")
    ids = ids.astype(np.int64)
    rows = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= rows):
        raise VocabIndexError(f"embedding id out of range [0, {rows}): min={ids.min()} max={ids.max()}")
    shape = table.shape

    def _back(g: np.ndarray):
        full = np.zeros(shape)
        np.add.at(full, ids, g)
        return (full,)

    return make_node(table.values[ids], (table,), _back, "embedding")


__all__ = [
    "Tensor",
    "as_tensor",
    "make_node",
    "backward",
    "no_grad",
    "is_grad_enabled",
    "check_finite",
    "add",
    "sub",
    "mul",
    "neg",
    "tanh",
    "sigmoid",
    "exp",
    "log",
    "square",
    "matmul",
    "sum_",
    "mean",
    "reshape",
    "concat",
    "stack",
    "slice_axis",
    "select",
    "embedding",
]
