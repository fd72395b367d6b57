"""Phone-feature transforms feeding the encoder."""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from numcore.errors import ShapeError, VocabIndexError
from numcore.tensor import Tensor, as_tensor, concat, embedding

from .alignment import segments


def average_by_segment(features: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    """One row per phone segment: the mean of that segment's frames."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != len(labels):
        raise ShapeError("average_by_segment: feature rows must match label count", features.shape, (len(labels),))
    segs = segments(labels)
    if not segs:
        return np.zeros((0, features.shape[1]))
    starts = np.asarray([seg.start for seg in segs])
    lengths = np.asarray([seg.length for seg in segs], dtype=np.float64)
    return np.add.reduceat(features, starts, axis=0) / lengths[:, None]


def length_reduction(num_frames: int, labels: Sequence[str]) -> float:
    """Fraction of source positions removed by segment averaging."""
    if num_frames == 0:
        return 0.0
    return 1.0 - len(segments(labels)) / num_frames


def factor_concat(
    features: Union[np.ndarray, Tensor],
    label_ids: Sequence[int],
    phone_embeddings: Tensor,
) -> Tensor:
    """Row t becomes features[t] followed by the embedding of label t.

    Works on a single T x d matrix or a padded B x T x d batch with B x T ids.
    """
    features = as_tensor(features)
    ids = np.asarray(label_ids, dtype=np.int64)
    if features.ndim not in (2, 3) or features.shape[:-1] != ids.shape:
        raise ShapeError("factor_concat: one label per frame is required", features.shape, ids.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= phone_embeddings.shape[0]):
        raise VocabIndexError(f"phone id outside embedding table of {phone_embeddings.shape[0]} rows")
    return concat([features, embedding(phone_embeddings, ids)], axis=-1)
