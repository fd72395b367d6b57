"""Encoder inputs: one SourceItem per utterance, padded into a SourceBatch."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from numcore.errors import ContractError, ShapeError
from textpipe.vocab import Vocabulary

from .layers import lengths_to_mask


@dataclass
class SourceItem:
    features: Optional[np.ndarray] = None
    phone_ids: Optional[np.ndarray] = None
    tokens: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        if self.tokens is not None:
            return int(len(self.tokens))
        if self.features is not None:
            return int(self.features.shape[0])
        return 0


@dataclass
class SourceBatch:
    lengths: np.ndarray
    features: Optional[np.ndarray] = None
    phone_ids: Optional[np.ndarray] = None
    tokens: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.lengths.shape[0])

    @property
    def steps(self) -> int:
        return int(self.lengths.max()) if self.size else 0

    @property
    def mask(self) -> np.ndarray:
        return lengths_to_mask(self.lengths, self.steps)

    def take(self, index: int) -> "SourceBatch":
        sl = slice(index, index + 1)
        length = int(self.lengths[index])
        return SourceBatch(
            lengths=self.lengths[sl].copy(),
            features=None if self.features is None else self.features[sl, :length].copy(),
            phone_ids=None if self.phone_ids is None else self.phone_ids[sl, :length].copy(),
            tokens=None if self.tokens is None else self.tokens[sl, :length].copy(),
        )


def collate_sources(items: Sequence[SourceItem]) -> SourceBatch:
    if not items:
        raise ContractError("cannot collate an empty batch")
    lengths = np.asarray([item.length for item in items], dtype=np.int64)
    steps = int(lengths.max()) if lengths.size else 0
    batch = SourceBatch(lengths=lengths)
    if items[0].features is not None:
        dim = items[0].features.shape[1]
        feats = np.zeros((len(items), steps, dim))
        for b, item in enumerate(items):
            if item.features.shape[1] != dim:
                raise ShapeError("collate_sources: feature widths differ", item.features.shape, (dim,))
            feats[b, : item.length] = item.features
        batch.features = feats
    if items[0].phone_ids is not None:
        ids = np.zeros((len(items), steps), dtype=np.int64)
        for b, item in enumerate(items):
            if len(item.phone_ids) != item.length:
                raise ShapeError("collate_sources: one phone id per frame is required", (len(item.phone_ids),), (item.length,))
            ids[b, : item.length] = item.phone_ids
        batch.phone_ids = ids
    if items[0].tokens is not None:
        toks = np.full((len(items), steps), Vocabulary.pad_id, dtype=np.int64)
        for b, item in enumerate(items):
            toks[b, : item.length] = item.tokens
        batch.tokens = toks
    return batch
