"""Seq2Seq: encoder, attention and speller bound to one parameter set."""

from __future__ import annotations

import logging
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from numcore.checkpoint import Checkpoint
from numcore.errors import ConsistencyError, ContractError, ParseError
from numcore.functional import Mode, cross_entropy_label_smoothed
from numcore.optim import AdamState
from numcore.params import Parameters
from numcore.tensor import Tensor, stack
from textpipe.vocab import Vocabulary

from .attention import attention_keys
from .batch import SourceBatch
from .config import ArchConfig
from .encoder import EncoderOutput, add_encoder_params, encode
from .speller import DecoderState, add_decoder_params, decode_step, init_state
from .variants import ModelVariant, get_variant

logger = logging.getLogger(__name__)

# Floor on an embedding row norm before rescaling to unit length.
NORM_FLOOR = 1e-12


def pad_targets(targets: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Teacher-forcing inputs (<s> + y[:-1]), outputs y and the validity mask."""
    if not targets:
        raise ContractError("no target sequences")
    steps = max(len(t) for t in targets)
    if steps == 0:
        raise ContractError("every target sequence is empty")
    inputs = np.full((len(targets), steps), Vocabulary.pad_id, dtype=np.int64)
    outputs = np.full((len(targets), steps), Vocabulary.pad_id, dtype=np.int64)
    for b, seq in enumerate(targets):
        seq = list(seq)
        if not seq:
            continue
        outputs[b, : len(seq)] = seq
        inputs[b, 0] = Vocabulary.bos_id
        inputs[b, 1 : len(seq)] = seq[:-1]
    mask = (outputs != Vocabulary.pad_id).astype(np.float64)
    return inputs, outputs, mask


class Seq2Seq:
    """Attentional encoder-decoder for one model variant."""

    def __init__(
        self,
        variant: ModelVariant,
        arch: ArchConfig,
        params: Parameters,
        input_dim: int,
        target_vocab_size: int,
        source_vocab_size: int = 0,
        phone_vocab_size: int = 0,
    ) -> None:
        self.variant = variant
        self.arch = arch
        self.params = params
        self.input_dim = input_dim
        self.target_vocab_size = target_vocab_size
        self.source_vocab_size = source_vocab_size
        self.phone_vocab_size = phone_vocab_size

    @classmethod
    def build(
        cls,
        variant: ModelVariant,
        arch: ArchConfig,
        input_dim: int,
        target_vocab_size: int,
        rng: np.random.Generator,
        source_vocab_size: int = 0,
        phone_vocab_size: int = 0,
    ) -> "Seq2Seq":
        params = Parameters()
        add_encoder_params(params, arch, variant, input_dim, source_vocab_size, phone_vocab_size, rng)
        add_decoder_params(params, arch, target_vocab_size, rng)
        model = cls(variant, arch, params, input_dim, target_vocab_size, source_vocab_size, phone_vocab_size)
        if arch.fix_target_norm:
            model.renormalize_embeddings()
        logger.info(
            "Built %s: %d parameters in %d tensors", variant.tag.value, params.count(), len(params)
        )
        return model

    # ---- forward ----

    def encode(self, batch: SourceBatch, mode: Mode = Mode.EVAL, rng: Optional[np.random.Generator] = None) -> EncoderOutput:
        encoded = encode(self.params, self.arch, self.variant, batch, mode, rng)
        encoded.keys = attention_keys(self.params, encoded.states)
        return encoded

    def init_state(self, batch: int) -> DecoderState:
        return init_state(self.arch, batch)

    def decode_step(
        self,
        prev_tokens: np.ndarray,
        state: DecoderState,
        encoded: EncoderOutput,
        mode: Mode = Mode.EVAL,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[Tensor, DecoderState, Tensor]:
        return decode_step(self.params, self.arch, prev_tokens, state, encoded, mode, rng)

    def forward_loss(
        self,
        batch: SourceBatch,
        targets: Sequence[Sequence[int]],
        mode: Mode = Mode.TRAIN,
        rng: Optional[np.random.Generator] = None,
        label_smoothing: Optional[float] = None,
    ) -> Tensor:
        """Mean label-smoothed cross-entropy per target token under teacher forcing.

        Each target sequence should end with </s>; pad ids count as padding.
        """
        if len(targets) != batch.size:
            raise ContractError(f"{batch.size} sources but {len(targets)} target sequences")
        eps = self.arch.label_smoothing if label_smoothing is None else label_smoothing
        inputs, outputs, mask = pad_targets(targets)
        encoded = self.encode(batch, mode, rng)
        state = self.init_state(batch.size)
        step_logits = []
        for t in range(inputs.shape[1]):
            logits, state, _ = self.decode_step(inputs[:, t], state, encoded, mode, rng)
            step_logits.append(logits)
        return cross_entropy_label_smoothed(stack(step_logits, axis=1), outputs, eps, mask)

    # ---- parameter upkeep ----

    def renormalize_embeddings(self) -> None:
        """Rescale every target-embedding row to unit L2 norm."""
        table = self.params["tgt.embed"]
        norms = np.linalg.norm(table.values, axis=1, keepdims=True)
        table.values = table.values / np.maximum(norms, NORM_FLOOR)

    def snapshot(self) -> "Seq2Seq":
        return Seq2Seq(
            self.variant,
            self.arch,
            self.params.snapshot(),
            self.input_dim,
            self.target_vocab_size,
            self.source_vocab_size,
            self.phone_vocab_size,
        )

    # ---- persistence ----

    def metadata(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.tag.value,
            "arch": self.arch.model_dump(),
            "input_dim": self.input_dim,
            "target_vocab_size": self.target_vocab_size,
            "source_vocab_size": self.source_vocab_size,
            "phone_vocab_size": self.phone_vocab_size,
        }

    def checkpoint(self, optimizer: Optional[AdamState] = None, extra: Optional[Dict[str, Any]] = None) -> Checkpoint:
        metadata = self.metadata()
        metadata.update(extra or {})
        return Checkpoint.capture(self.params, optimizer, metadata)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "Seq2Seq":
        meta = checkpoint.metadata
        try:
            variant = get_variant(meta["variant"])
            arch = ArchConfig(**meta["arch"])
            model = cls.build(
                variant,
                arch,
                int(meta["input_dim"]),
                int(meta["target_vocab_size"]),
                np.random.default_rng(0),
                int(meta.get("source_vocab_size", 0)),
                int(meta.get("phone_vocab_size", 0)),
            )
        except KeyError as exc:
            raise ParseError(f"Checkpoint metadata is missing {exc}") from exc
        try:
            checkpoint.restore(model.params)
        except ConsistencyError as exc:
            raise ConsistencyError(f"Checkpoint does not fit a {variant.tag.value} model: {exc}") from exc
        return model
