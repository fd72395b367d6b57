"""Neural primitives built on the autodiff core."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import ContractError, ParameterError, ShapeError, VocabIndexError
from .tensor import Tensor, TensorLike, as_tensor, make_node, mul, sum_

# Running statistics use an exponential moving average with this weight on the past.
BN_MOMENTUM = 0.9
BN_VARIANCE_FLOOR = 1e-8


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


def softmax(x: TensorLike, axis: int = -1) -> Tensor:
    """Numerically stable softmax along one axis (max-subtraction)."""
    x = as_tensor(x)
    if x.ndim == 0 or x.shape[axis] == 0:
        raise ShapeError("softmax needs a non-empty axis", x.shape)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _back(g: np.ndarray):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return make_node(y, (x,), _back, "softmax")


def log_softmax(x: TensorLike, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if x.ndim == 0 or x.shape[axis] == 0:
        raise ShapeError("log_softmax needs a non-empty axis", x.shape)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    y = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def _back(g: np.ndarray):
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True),)

    return make_node(y, (x,), _back, "log_softmax")


def cross_entropy_label_smoothed(
    logits: TensorLike,
    target: Union[int, np.ndarray],
    eps: float,
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Mean label-smoothed cross-entropy over the unmasked positions.

    The smoothed target puts eps/V on every class and 1-eps extra on the
    gold class, so q_target = 1 - eps + eps/V. `logits` is (..., V) and
    `target` has the leading shape of logits.
    """
    logits = as_tensor(logits)
    if not 0.0 <= eps < 1.0:
        raise ParameterError(f"label smoothing eps must be in [0, 1), got {eps}")
    vocab = logits.shape[-1]
    targets = np.asarray(target, dtype=np.int64)
    if targets.shape != logits.shape[:-1]:
        raise ShapeError("cross_entropy: target shape must match logits without the class axis", targets.shape, logits.shape)
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise VocabIndexError(f"target id out of range [0, {vocab})")
    weights = np.ones(targets.shape) if mask is None else np.asarray(mask, dtype=np.float64)
    if weights.shape != targets.shape:
        raise ShapeError("cross_entropy: mask shape must match target shape", weights.shape, targets.shape)
    count = weights.sum()
    if count <= 0:
        raise ContractError("cross_entropy: every position is masked out")

    q = np.full(logits.shape, eps / vocab)
    np.put_along_axis(q, targets[..., None], 1.0 - eps + eps / vocab, axis=-1)
    log_probs = log_softmax(logits, axis=-1)
    per_position = -sum_(mul(log_probs, q), axis=-1)
    return mul(sum_(mul(per_position, weights)), 1.0 / count)


@dataclass
class RunningStats:
    """Batch-norm running mean/variance for one feature layer."""

    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def neutral(cls, features: int) -> "RunningStats":
        return cls(mean=np.zeros(features), var=np.ones(features))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "var": self.var.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "RunningStats":
        return cls(mean=np.asarray(data["mean"], dtype=np.float64), var=np.asarray(data["var"], dtype=np.float64))


def batch_norm(
    x: TensorLike,
    gamma: Tensor,
    beta: Tensor,
    mode: Mode,
    running_stats: RunningStats,
    mask: Optional[np.ndarray] = None,
    momentum: float = BN_MOMENTUM,
    floor: float = BN_VARIANCE_FLOOR,
) -> Tensor:
    """Normalise (batch x time x features) per feature over batch and time.

    Only positions with mask=1 contribute to the statistics; masked
    positions come out as zeros. Train mode uses population variance of the
    batch and updates `running_stats` in place; eval mode uses them.
    """
    x = as_tensor(x)
    features = x.shape[-1]
    if gamma.shape != (features,) or beta.shape != (features,):
        raise ShapeError("batch_norm: gamma/beta must match the feature extent", x.shape, gamma.shape, beta.shape)
    flat = x.values.reshape(-1, features)
    valid = np.ones(flat.shape[0], dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
    if valid.shape[0] != flat.shape[0]:
        raise ShapeError("batch_norm: mask does not cover the batch x time positions", np.shape(mask), x.shape)
    keep = valid[:, None].astype(np.float64)

    if Mode(mode) is Mode.TRAIN:
        count = int(valid.sum())
        if count == 0:
            raise ContractError("batch_norm: no valid positions in train mode")
        mu = flat[valid].mean(axis=0)
        var = ((flat[valid] - mu) ** 2).mean(axis=0)
        running_stats.mean = momentum * running_stats.mean + (1.0 - momentum) * mu
        running_stats.var = momentum * running_stats.var + (1.0 - momentum) * var
    else:
        count = 0
        mu = running_stats.mean
        var = running_stats.var

    inv_std = 1.0 / np.sqrt(var + floor)
    x_hat = (flat - mu) * inv_std * keep
    y = (x_hat * gamma.values + beta.values) * keep
    shape = x.shape
    training = Mode(mode) is Mode.TRAIN

    def _back(g: np.ndarray):
        dy = g.reshape(-1, features) * keep
        d_gamma = (dy * x_hat).sum(axis=0)
        d_beta = dy.sum(axis=0)
        d_xhat = dy * gamma.values
        if training:
            dx = (inv_std / count) * (
                count * d_xhat - d_xhat.sum(axis=0) - x_hat * (d_xhat * x_hat).sum(axis=0)
            )
            dx = dx * keep
        else:
            dx = d_xhat * inv_std
        return dx.reshape(shape), d_gamma, d_beta

    return make_node(y.reshape(shape), (x, gamma, beta), _back, "batch_norm")


def dropout(x: TensorLike, p: float, mode: Mode, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity in eval mode or when p == 0."""
    x = as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout probability must be in [0, 1), got {p}")
    if Mode(mode) is Mode.EVAL or p == 0.0:
        return x
    if rng is None:
        raise ParameterError("dropout in train mode needs an rng stream")
    keep = (rng.random(x.shape) >= p).astype(np.float64) / (1.0 - p)
    return mul(x, keep)
