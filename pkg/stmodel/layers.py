"""Recurrent and linear building blocks over numcore tensors."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from numcore.errors import ShapeError
from numcore.params import Parameters
from numcore.tensor import Tensor, add, make_node, matmul, mul, reshape, sigmoid, slice_axis, tanh


def uniform(rng: np.random.Generator, shape: Tuple[int, ...], scale: float) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)


def add_linear(params: Parameters, prefix: str, fan_in: int, fan_out: int, rng: np.random.Generator, scale: float, bias: bool = True) -> None:
    params.add(f"{prefix}.W", uniform(rng, (fan_in, fan_out), scale))
    if bias:
        params.add(f"{prefix}.b", np.zeros(fan_out))


def add_lstm(params: Parameters, prefix: str, fan_in: int, hidden: int, rng: np.random.Generator, scale: float) -> None:
    """Gate order i, f, g, o; forget-gate bias starts at +1."""
    params.add(f"{prefix}.Wx", uniform(rng, (fan_in, 4 * hidden), scale))
    params.add(f"{prefix}.Wh", uniform(rng, (hidden, 4 * hidden), scale))
    bias = np.zeros(4 * hidden)
    bias[hidden: 2 * hidden] = 1.0
    params.add(f"{prefix}.b", bias)


def linear(x: Tensor, params: Parameters, prefix: str) -> Tensor:
    """Affine map over the last axis of a 2-D or 3-D tensor."""
    W = params[f"{prefix}.W"]
    bias_name = f"{prefix}.b"
    if x.ndim == 2:
        y = matmul(x, W)
    else:
        lead = x.shape[:-1]
        y = reshape(matmul(reshape(x, (-1, x.shape[-1])), W), lead + (W.shape[1],))
    return add(y, params[bias_name]) if bias_name in params else y


def lstm_cell(gates: Tensor, c_prev: Tensor, hidden: int) -> Tuple[Tensor, Tensor]:
    i = sigmoid(slice_axis(gates, 0, hidden, axis=-1))
    f = sigmoid(slice_axis(gates, hidden, 2 * hidden, axis=-1))
    g = tanh(slice_axis(gates, 2 * hidden, 3 * hidden, axis=-1))
    o = sigmoid(slice_axis(gates, 3 * hidden, 4 * hidden, axis=-1))
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_sequence(projected: Tensor, Wh: Tensor, mask: np.ndarray, reverse: bool = False) -> Tensor:
    """One LSTM direction over precomputed input projections (B x T x 4h) -> (B x T x h).

    Recorded as a single graph node with hand-written backpropagation through
    time. At padded steps (mask 0) the state is carried through unchanged and
    the output is zero, so the reverse direction starts at each sequence's
    last valid frame.
    """
    x = projected.values
    W = Wh.values
    batch, steps, width = x.shape
    hidden = W.shape[0]
    if width != 4 * hidden:
        raise ShapeError("lstm_sequence: projection width must be 4 x hidden", x.shape, W.shape)
    keep = np.asarray(mask, dtype=np.float64)[:, :, None]
    order = list(range(steps - 1, -1, -1)) if reverse else list(range(steps))

    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    out = np.zeros((batch, steps, hidden))
    cache = []
    for t in order:
        k = keep[:, t]
        a = x[:, t] + h @ W
        i = _sigmoid(a[:, :hidden])
        f = _sigmoid(a[:, hidden:2 * hidden])
        g = np.tanh(a[:, 2 * hidden:3 * hidden])
        o = _sigmoid(a[:, 3 * hidden:])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        cache.append((t, k, h, c, i, f, g, o, tanh_c))
        h = k * h_new + (1.0 - k) * h
        c = k * c_new + (1.0 - k) * c
        out[:, t] = k * h

    def _back(grad: np.ndarray):
        d_proj = np.zeros_like(x)
        d_W = np.zeros_like(W)
        dh_next = np.zeros((batch, hidden))
        dc_next = np.zeros((batch, hidden))
        for t, k, h_prev, c_prev, i, f, g, o, tanh_c in reversed(cache):
            dh = dh_next + k * grad[:, t]
            dh_new = k * dh
            dc_new = k * dc_next + dh_new * o * (1.0 - tanh_c * tanh_c)
            d_gates = np.concatenate(
                [
                    dc_new * g * i * (1.0 - i),
                    dc_new * c_prev * f * (1.0 - f),
                    dc_new * i * (1.0 - g * g),
                    dh_new * tanh_c * o * (1.0 - o),
                ],
                axis=1,
            )
            d_proj[:, t] = d_gates
            d_W += h_prev.T @ d_gates
            dh_next = d_gates @ W.T + (1.0 - k) * dh
            dc_next = dc_new * f + (1.0 - k) * dc_next
        return d_proj, d_W

    return make_node(out, (projected, Wh), _back, "lstm_sequence")


def run_lstm(
    x: Tensor,
    mask: np.ndarray,
    params: Parameters,
    prefix: str,
    reverse: bool = False,
) -> Tensor:
    """One LSTM direction of an encoder layer over a right-padded batch."""
    return lstm_sequence(linear_lstm_input(x, params, prefix), params[f"{prefix}.Wh"], mask, reverse)


def linear_lstm_input(x: Tensor, params: Parameters, prefix: str) -> Tensor:
    """x @ Wx + b for every step at once (B x T x 4h)."""
    Wx = params[f"{prefix}.Wx"]
    batch, steps, width = x.shape
    flat = matmul(reshape(x, (batch * steps, width)), Wx)
    return reshape(add(flat, params[f"{prefix}.b"]), (batch, steps, Wx.shape[1]))


def lstm_step(x: Tensor, h: Tensor, c: Tensor, params: Parameters, prefix: str) -> Tuple[Tensor, Tensor]:
    """Single decoder step of a stacked-LSTM layer."""
    Wh = params[f"{prefix}.Wh"]
    gates = add(add(matmul(x, params[f"{prefix}.Wx"]), matmul(h, Wh)), params[f"{prefix}.b"])
    return lstm_cell(gates, c, Wh.shape[0])


def lengths_to_mask(lengths: np.ndarray, steps: Optional[int] = None) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=np.int64)
    steps = int(lengths.max()) if steps is None else steps
    return (np.arange(steps)[None, :] < lengths[:, None]).astype(np.float64)
