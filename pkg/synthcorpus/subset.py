"""Seeded training-set subsets (the resource-condition axis)."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from numcore.errors import ParameterError
from numcore.rng import derive

from .config import FRAMES_PER_SECOND
from .models import Corpus

logger = logging.getLogger(__name__)


def subset(
    corpus: Corpus,
    fraction: Optional[float] = None,
    hours: Optional[float] = None,
    seed: int = 0,
    size: Optional[int] = None,
) -> Corpus:
    """Take a prefix of one seeded permutation of the train split.

    Exactly one of fraction, hours or size is given. Because every request
    is a prefix of the same permutation, smaller subsets nest inside larger
    ones for a given seed. Dev and test splits are left untouched.
    """
    given = [x is not None for x in (fraction, hours, size)]
    if sum(given) != 1:
        raise ParameterError("subset needs exactly one of fraction, hours or size")
    train = corpus.split("train")
    order = derive(seed, "subset").permutation(len(train))

    if fraction is not None:
        if not 0.0 < fraction <= 1.0:
            raise ParameterError(f"subset fraction must be in (0, 1], got {fraction}")
        count = int(round(fraction * len(train)))
    elif size is not None:
        if not 0 < size <= len(train):
            raise ParameterError(f"subset size {size} exceeds the {len(train)} training utterances")
        count = size
    else:
        budget = hours * 3600 * FRAMES_PER_SECOND
        total = sum(u.num_frames for u in train)
        if hours <= 0 or budget > total:
            raise ParameterError(f"requested {hours} h but the train split holds {total / 3600 / FRAMES_PER_SECOND:.4f} h")
        cumulative = np.cumsum([train[i].num_frames for i in order])
        count = int(np.searchsorted(cumulative, budget) + 1)

    chosen = sorted(int(i) for i in order[: max(count, 1)])
    logger.info("Subset: %d of %d training utterances", len(chosen), len(train))
    return corpus.with_train([train[i] for i in chosen])
