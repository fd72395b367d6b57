"""Per-speaker mean and variance normalisation."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from numcore.errors import ContractError, SpeakerLookupError

from .features import FeatureMatrix

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8


@dataclass
class SpeakerStats:
    speaker: str
    mean: np.ndarray
    var: np.ndarray
    frame_count: int

    def to_dict(self) -> dict:
        return {
            "speaker": self.speaker,
            "mean": self.mean.tolist(),
            "var": self.var.tolist(),
            "frame_count": self.frame_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpeakerStats":
        return cls(
            speaker=data["speaker"],
            mean=np.asarray(data["mean"], dtype=np.float64),
            var=np.asarray(data["var"], dtype=np.float64),
            frame_count=int(data["frame_count"]),
        )


def compute_stats(features: Iterable[FeatureMatrix]) -> Dict[str, SpeakerStats]:
    grouped: Dict[str, List[np.ndarray]] = defaultdict(list)
    for item in features:
        grouped[item.speaker].append(item.frames)
    stats: Dict[str, SpeakerStats] = {}
    for speaker in sorted(grouped):
        stacked = np.concatenate(grouped[speaker], axis=0)
        if stacked.shape[0] == 0:
            raise ContractError(f"speaker {speaker} has no frames")
        stats[speaker] = SpeakerStats(
            speaker=speaker,
            mean=stacked.mean(axis=0),
            var=stacked.var(axis=0),
            frame_count=int(stacked.shape[0]),
        )
    return stats


def apply_stats(item: FeatureMatrix, stats: Dict[str, SpeakerStats]) -> FeatureMatrix:
    try:
        entry = stats[item.speaker]
    except KeyError:
        raise SpeakerLookupError(item.speaker) from None
    scale = 1.0 / np.sqrt(np.maximum(entry.var, VARIANCE_FLOOR))
    return item.with_frames((item.frames - entry.mean) * scale)


def cmvn(features: Sequence[FeatureMatrix]) -> Tuple[List[FeatureMatrix], Dict[str, SpeakerStats]]:
    stats = compute_stats(features)
    logger.debug("CMVN statistics for %d speakers", len(stats))
    return [apply_stats(item, stats) for item in features], stats
