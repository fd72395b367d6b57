"""Pyramidal bidirectional LSTM encoder with NiN pair projections."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from numcore.errors import ContractError, ParameterError
from numcore.functional import Mode, RunningStats, batch_norm, dropout
from numcore.params import Parameters
from numcore.tensor import Tensor, concat, embedding, reshape
from phonesup.transforms import factor_concat

from .batch import SourceBatch
from .config import ArchConfig
from .layers import add_linear, add_lstm, lengths_to_mask, linear, run_lstm, uniform
from .variants import InputKind, ModelVariant

logger = logging.getLogger(__name__)


@dataclass
class EncoderOutput:
    states: Tensor
    lengths: np.ndarray
    mask: np.ndarray
    keys: Optional[Tensor] = None

    @property
    def steps(self) -> int:
        return int(self.states.shape[1])

    def select(self, rows) -> "EncoderOutput":
        """Gather batch rows, e.g. to tile one utterance across a beam. Detaches."""
        rows = np.asarray(rows, dtype=np.int64)
        return EncoderOutput(
            states=Tensor(self.states.values[rows]),
            lengths=self.lengths[rows],
            mask=self.mask[rows],
            keys=None if self.keys is None else Tensor(self.keys.values[rows]),
        )


def add_encoder_params(
    params: Parameters,
    arch: ArchConfig,
    variant: ModelVariant,
    input_dim: int,
    source_vocab_size: int,
    phone_vocab_size: int,
    rng: np.random.Generator,
) -> None:
    scale = arch.init_scale
    if variant.input_kind is InputKind.TOKENS:
        if source_vocab_size <= 0:
            raise ParameterError(f"{variant.tag.value} needs a source vocabulary")
        params.add("src.embed", uniform(rng, (source_vocab_size, arch.embedding_dim), scale))
    if variant.input_kind is InputKind.FRAMES_PHONE_FACTOR:
        if phone_vocab_size <= 0:
            raise ParameterError(f"{variant.tag.value} needs a phone inventory")
        params.add("phone.embed", uniform(rng, (phone_vocab_size, arch.embedding_dim), scale))

    width = variant.input_width(input_dim, arch.embedding_dim)
    two_h = 2 * arch.hidden
    for layer in range(1, arch.encoder_layers + 1):
        fan_in = width if layer == 1 else two_h
        add_lstm(params, f"enc.l{layer}.fwd", fan_in, arch.hidden, rng, scale)
        add_lstm(params, f"enc.l{layer}.bwd", fan_in, arch.hidden, rng, scale)
        if layer in arch.downsample_after:
            add_linear(params, f"enc.l{layer}.nin", 2 * two_h, two_h, rng, scale)
            params.add(f"enc.l{layer}.bn.gamma", np.ones(two_h))
            params.add(f"enc.l{layer}.bn.beta", np.zeros(two_h))
            params.add_buffer(f"enc.l{layer}.bn", RunningStats.neutral(two_h))


def embed_source(params: Parameters, variant: ModelVariant, batch: SourceBatch) -> Tensor:
    kind = variant.input_kind
    if kind is InputKind.TOKENS:
        if batch.tokens is None:
            raise ContractError(f"{variant.tag.value} expects token input")
        return embedding(params["src.embed"], batch.tokens)
    if batch.features is None:
        raise ContractError(f"{variant.tag.value} expects feature input")
    if kind is InputKind.FRAMES_PHONE_FACTOR:
        if batch.phone_ids is None:
            raise ContractError("phone-factored input needs phone ids")
        return factor_concat(batch.features, batch.phone_ids, params["phone.embed"])
    return Tensor(batch.features)


def pair_downsample(x: Tensor, lengths: np.ndarray, params: Parameters, prefix: str, mode: Mode):
    """Concatenate adjacent time steps, project 4h -> 2h, batch-normalise."""
    batch, steps, width = x.shape
    if steps % 2:
        x = concat([x, Tensor(np.zeros((batch, 1, width)))], axis=1)
        steps += 1
    x = reshape(x, (batch, steps // 2, 2 * width))
    x = linear(x, params, f"{prefix}.nin")
    new_lengths = (lengths + 1) // 2
    mask = lengths_to_mask(new_lengths, steps // 2)
    x = batch_norm(
        x,
        params[f"{prefix}.bn.gamma"],
        params[f"{prefix}.bn.beta"],
        mode,
        params.buffers[f"{prefix}.bn"],
        mask=mask,
    )
    return x, new_lengths, mask


def encode(
    params: Parameters,
    arch: ArchConfig,
    variant: ModelVariant,
    batch: SourceBatch,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> EncoderOutput:
    if batch.size == 0 or int(batch.lengths.min()) < 1:
        raise ContractError("encode: every source sequence must be non-empty")
    x = embed_source(params, variant, batch)
    lengths = batch.lengths.copy()
    mask = batch.mask
    for layer in range(1, arch.encoder_layers + 1):
        forward = run_lstm(x, mask, params, f"enc.l{layer}.fwd")
        backward = run_lstm(x, mask, params, f"enc.l{layer}.bwd", reverse=True)
        x = concat([forward, backward], axis=-1)
        if layer in arch.downsample_after:
            x, lengths, mask = pair_downsample(x, lengths, params, f"enc.l{layer}", mode)
        if layer < arch.encoder_layers:
            x = dropout(x, arch.dropout, mode, rng)
    return EncoderOutput(states=x, lengths=lengths, mask=mask)
