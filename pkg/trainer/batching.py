"""Length-bucketed dynamic batches under a source-frame budget."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from numcore.errors import ParameterError

from .config import MAX_SOURCE_FRAMES

logger = logging.getLogger(__name__)


@dataclass
class BatchPlan:
    batches: List[List[int]]
    excluded: List[int] = field(default_factory=list)

    @property
    def included(self) -> int:
        return sum(len(b) for b in self.batches)

    @property
    def mean_batch_size(self) -> float:
        return self.included / len(self.batches) if self.batches else 0.0


def make_batches(
    lengths: Sequence[int],
    frame_budget: int,
    rng: np.random.Generator,
    max_frames: int = MAX_SOURCE_FRAMES,
    frame_counts: Optional[Sequence[int]] = None,
) -> BatchPlan:
    """Partition example indices into batches whose summed lengths fit the budget.

    `lengths` are encoder input lengths; `frame_counts` (default: lengths)
    decide exclusion, so every variant drops the same long utterances.
    Included examples are shuffled, stably sorted by length, packed greedily,
    and the batch order is shuffled again.
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    counts = lengths if frame_counts is None else np.asarray(frame_counts, dtype=np.int64)
    if counts.shape != lengths.shape:
        raise ParameterError("frame_counts must give one count per example")
    if frame_budget < 1:
        raise ParameterError(f"frame budget must be positive, got {frame_budget}")

    excluded = [int(i) for i in np.flatnonzero(counts > max_frames)]
    if excluded:
        logger.info("Excluded %d utterances longer than %d frames", len(excluded), max_frames)
    included = np.flatnonzero(counts <= max_frames)
    if included.size == 0:
        return BatchPlan([], excluded)
    longest = int(lengths[included].max())
    if frame_budget < longest:
        raise ParameterError(f"frame budget {frame_budget} is smaller than the longest included utterance ({longest})")

    shuffled = included[rng.permutation(included.size)]
    ordered = shuffled[np.argsort(lengths[shuffled], kind="stable")]
    batches: List[List[int]] = []
    current: List[int] = []
    used = 0
    for index in ordered:
        size = int(lengths[index])
        if current and used + size > frame_budget:
            batches.append(current)
            current, used = [], 0
        current.append(int(index))
        used += size
    if current:
        batches.append(current)
    order = rng.permutation(len(batches))
    return BatchPlan([batches[i] for i in order], excluded)
