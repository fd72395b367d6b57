"""Attentional LSTM decoder, one output token per step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from numcore.functional import Mode, dropout
from numcore.params import Parameters
from numcore.tensor import Tensor, concat, embedding

from .attention import add_attention_params, attend
from .config import ArchConfig
from .encoder import EncoderOutput
from .layers import add_linear, add_lstm, linear, lstm_step, uniform


@dataclass
class DecoderState:
    h: List[Tensor]
    c: List[Tensor]
    context: Tensor

    @property
    def size(self) -> int:
        return int(self.context.shape[0])

    def reorder(self, rows: Sequence[int]) -> "DecoderState":
        """Gather rows (beam bookkeeping). Detaches from the graph."""
        rows = np.asarray(rows, dtype=np.int64)
        return DecoderState(
            h=[Tensor(t.values[rows]) for t in self.h],
            c=[Tensor(t.values[rows]) for t in self.c],
            context=Tensor(self.context.values[rows]),
        )


def add_decoder_params(params: Parameters, arch: ArchConfig, target_vocab_size: int, rng: np.random.Generator) -> None:
    scale = arch.init_scale
    params.add("tgt.embed", uniform(rng, (target_vocab_size, arch.embedding_dim), scale))
    for layer in range(1, arch.decoder_layers + 1):
        fan_in = arch.embedding_dim + arch.context_dim if layer == 1 else arch.hidden
        add_lstm(params, f"dec.l{layer}", fan_in, arch.hidden, rng, scale)
    add_attention_params(params, arch.context_dim, arch.hidden, arch.attention_units, rng, scale)
    add_linear(params, "out", arch.hidden + arch.context_dim, target_vocab_size, rng, scale)


def init_state(arch: ArchConfig, batch: int) -> DecoderState:
    """Zero hidden/cell state and zero previous context."""
    return DecoderState(
        h=[Tensor(np.zeros((batch, arch.hidden))) for _ in range(arch.decoder_layers)],
        c=[Tensor(np.zeros((batch, arch.hidden))) for _ in range(arch.decoder_layers)],
        context=Tensor(np.zeros((batch, arch.context_dim))),
    )


def decode_step(
    params: Parameters,
    arch: ArchConfig,
    prev_tokens: np.ndarray,
    state: DecoderState,
    encoded: EncoderOutput,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Tensor, DecoderState, Tensor]:
    """Returns (logits B x V, next state, attention weights B x T')."""
    emb = embedding(params["tgt.embed"], np.asarray(prev_tokens, dtype=np.int64))
    emb = dropout(emb, arch.embedding_dropout, mode, rng)
    x = concat([emb, state.context], axis=-1)
    hs: List[Tensor] = []
    cs: List[Tensor] = []
    for layer in range(arch.decoder_layers):
        h, c = lstm_step(x, state.h[layer], state.c[layer], params, f"dec.l{layer + 1}")
        hs.append(h)
        cs.append(c)
        x = h
    context, weights = attend(params, x, encoded.states, encoded.keys, encoded.mask)
    features = dropout(concat([x, context], axis=-1), arch.dropout, mode, rng)
    logits = linear(features, params, "out")
    return logits, DecoderState(h=hs, c=cs, context=context), weights
