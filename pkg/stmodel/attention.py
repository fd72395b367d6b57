"""Single-layer MLP attention: score_t = v . tanh(W_enc h_t + W_dec s)."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from numcore.errors import ContractError, ShapeError
from numcore.functional import softmax
from numcore.params import Parameters
from numcore.tensor import Tensor, add, matmul, mul, reshape, sum_, tanh

from .layers import add_linear, linear

# Added to scores of padded positions; exp() of it underflows to exactly 0.
MASK_BIAS = -1e30


def add_attention_params(params: Parameters, context_dim: int, query_dim: int, units: int, rng: np.random.Generator, scale: float) -> None:
    add_linear(params, "att.enc", context_dim, units, rng, scale, bias=False)
    add_linear(params, "att.dec", query_dim, units, rng, scale, bias=False)
    add_linear(params, "att.v", units, 1, rng, scale, bias=False)


def attention_keys(params: Parameters, states: Tensor) -> Tensor:
    """W_enc h_t for every encoder state; computed once per utterance."""
    return linear(states, params, "att.enc")


def attend(
    params: Parameters,
    query: Tensor,
    states: Tensor,
    keys: Tensor,
    mask: np.ndarray,
) -> Tuple[Tensor, Tensor]:
    """Context vector (B x 2h) and attention weights (B x T') over valid positions."""
    batch, steps, _ = states.shape
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (batch, steps):
        raise ShapeError("attend: mask must be B x T'", mask.shape, (batch, steps))
    if np.any(mask.sum(axis=1) < 1):
        raise ContractError("attend: valid length must be at least 1")
    units = keys.shape[-1]
    projected_query = reshape(matmul(query, params["att.dec.W"]), (batch, 1, units))
    hidden = tanh(add(keys, projected_query))
    scores = reshape(matmul(reshape(hidden, (batch * steps, units)), params["att.v.W"]), (batch, steps))
    scores = add(scores, (1.0 - mask) * MASK_BIAS)
    weights = softmax(scores, axis=-1)
    context = sum_(mul(reshape(weights, (batch, steps, 1)), states), axis=1)
    return context, weights
