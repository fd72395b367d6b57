"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from .errors import ContractError, ParameterError, ShapeError
from .tensor import Tensor


@dataclass
class AdamState:
    lr: float = 0.0003
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ParameterError(f"Adam learning rate must be positive, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ParameterError(f"Adam betas must be in [0, 1), got ({self.beta1}, {self.beta2})")

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "t": self.t,
            "m": {k: {"shape": list(a.shape), "values": a.reshape(-1).tolist()} for k, a in self.m.items()},
            "v": {k: {"shape": list(a.shape), "values": a.reshape(-1).tolist()} for k, a in self.v.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdamState":
        def _arrays(block: dict) -> Dict[str, np.ndarray]:
            return {
                k: np.asarray(item["values"], dtype=np.float64).reshape(item["shape"])
                for k, item in block.items()
            }

        return cls(
            lr=data["lr"],
            beta1=data["beta1"],
            beta2=data["beta2"],
            epsilon=data["epsilon"],
            t=data["t"],
            m=_arrays(data.get("m", {})),
            v=_arrays(data.get("v", {})),
        )


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Optional[np.ndarray]],
    state: AdamState,
) -> AdamState:
    """Apply one bias-corrected Adam update in place; parameters without a gradient are left alone."""
    if state.t < 0:
        raise ContractError(f"Adam step counter must be non-negative, got {state.t}")
    for name, grad in grads.items():
        if grad is not None and np.shape(grad) != params[name].shape:
            raise ShapeError(f"Adam: gradient for {name} does not match its parameter", np.shape(grad), params[name].shape)

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(tensor.values)
            v = np.zeros_like(tensor.values)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.values = tensor.values - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state
