"""Simulated alignment quality: label substitution and boundary jitter."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from numcore.errors import ParameterError

from .alignment import SILENCE, PhoneAlignment, Segment

logger = logging.getLogger(__name__)

CONFUSION_NEIGHBOURS = 5


class TierName(str, Enum):
    GOLD = "gold"
    HIGH = "high"
    MED = "med"
    LOW = "low"


@dataclass(frozen=True)
class QualityTier:
    name: TierName
    substitution_prob: float
    jitter: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.substitution_prob <= 1.0:
            raise ParameterError(f"substitution probability out of range: {self.substitution_prob}")
        if self.jitter < 0:
            raise ParameterError(f"jitter must be non-negative: {self.jitter}")

    @property
    def is_identity(self) -> bool:
        return self.substitution_prob == 0.0 and self.jitter == 0


TIERS: Dict[TierName, QualityTier] = {
    TierName.GOLD: QualityTier(TierName.GOLD, 0.0, 0),
    TierName.HIGH: QualityTier(TierName.HIGH, 0.10, 3),
    TierName.MED: QualityTier(TierName.MED, 0.20, 3),
    TierName.LOW: QualityTier(TierName.LOW, 0.35, 3),
}

TIER_ORDER: Tuple[TierName, ...] = (TierName.GOLD, TierName.HIGH, TierName.MED, TierName.LOW)


def get_tier(name: str) -> QualityTier:
    key = name.value if isinstance(name, TierName) else str(name).lower()
    try:
        return TIERS[TierName(key)]
    except ValueError:
        raise ParameterError(f"unknown quality tier: {name!r} (expected one of {[t.value for t in TIER_ORDER]})") from None


class ConfusionTable:
    """For each phone, the labels it may be misrecognised as."""

    def __init__(self, candidates: Mapping[str, Sequence[str]]) -> None:
        self.candidates: Dict[str, List[str]] = {k: list(v) for k, v in candidates.items()}

    @classmethod
    def from_prototypes(
        cls,
        prototypes: Mapping[str, np.ndarray],
        k: int = CONFUSION_NEIGHBOURS,
        silence: str = SILENCE,
    ) -> "ConfusionTable":
        """Each phone's k nearest other phones by Euclidean prototype distance."""
        labels = sorted(p for p in prototypes if p != silence)
        if len(labels) < 2:
            raise ParameterError("a confusion table needs at least two non-silence phones")
        matrix = np.stack([np.asarray(prototypes[p], dtype=np.float64) for p in labels])
        distances = np.linalg.norm(matrix[:, None, :] - matrix[None, :, :], axis=-1)
        table: Dict[str, List[str]] = {}
        for i, label in enumerate(labels):
            order = sorted((distances[i, j], labels[j]) for j in range(len(labels)) if j != i)
            table[label] = [name for _, name in order[:k]]
        return cls(table)

    @classmethod
    def uniform(cls, phones: Sequence[str], silence: str = SILENCE) -> "ConfusionTable":
        labels = [p for p in phones if p != silence]
        return cls({p: [q for q in labels if q != p] for p in labels})

    def to_dict(self) -> dict:
        return {"candidates": self.candidates}

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionTable":
        return cls(data["candidates"])


@dataclass
class CorruptionReport:
    segments: int = 0
    eligible: int = 0
    substituted: int = 0
    boundaries: int = 0
    moved: int = 0

    def merge(self, other: "CorruptionReport") -> "CorruptionReport":
        return CorruptionReport(
            self.segments + other.segments,
            self.eligible + other.eligible,
            self.substituted + other.substituted,
            self.boundaries + other.boundaries,
            self.moved + other.moved,
        )

    @property
    def substitution_rate(self) -> float:
        return self.substituted / self.eligible if self.eligible else 0.0


def _jitter_boundaries(bounds: List[int], total: int, jitter: int, rng: np.random.Generator) -> List[int]:
    """Move each boundary by up to +-jitter; every segment keeps at least one frame."""
    moved: List[int] = []
    previous = 0
    for i, original in enumerate(bounds):
        # Leave one frame for each later segment.
        upper = total - (len(bounds) - i)
        proposed = original + int(rng.integers(-jitter, jitter + 1))
        position = min(max(proposed, previous + 1), upper)
        moved.append(position)
        previous = position
    return moved


def corrupt_with_report(
    alignment: PhoneAlignment,
    tier: QualityTier,
    rng: np.random.Generator,
    confusion: Optional[ConfusionTable] = None,
    silence: str = SILENCE,
) -> Tuple[PhoneAlignment, CorruptionReport]:
    segs = alignment.segments
    report = CorruptionReport(segments=len(segs), boundaries=max(len(segs) - 1, 0))
    if tier.is_identity or not segs:
        return PhoneAlignment(alignment.utt_id, alignment.labels), report
    if tier.substitution_prob > 0 and confusion is None:
        raise ParameterError("substitution needs a confusion table")

    labels: List[str] = []
    for seg in segs:
        draw = rng.random()
        if seg.label == silence:
            labels.append(seg.label)
            continue
        report.eligible += 1
        candidates = confusion.candidates.get(seg.label) if confusion is not None else None
        if draw < tier.substitution_prob and candidates:
            labels.append(candidates[int(rng.integers(len(candidates)))])
            report.substituted += 1
        else:
            labels.append(seg.label)

    bounds = [seg.start for seg in segs[1:]]
    if tier.jitter > 0 and bounds:
        new_bounds = _jitter_boundaries(bounds, alignment.num_frames, tier.jitter, rng)
        report.moved = sum(1 for a, b in zip(bounds, new_bounds) if a != b)
    else:
        new_bounds = bounds

    starts = [0] + new_bounds
    ends = new_bounds + [alignment.num_frames]
    new_segs = [Segment(label, s, e - s) for label, s, e in zip(labels, starts, ends)]
    return PhoneAlignment.from_segments(alignment.utt_id, new_segs), report


def corrupt(
    alignment: PhoneAlignment,
    tier: QualityTier,
    rng: np.random.Generator,
    confusion: Optional[ConfusionTable] = None,
    silence: str = SILENCE,
) -> PhoneAlignment:
    """Degrade an alignment to a quality tier; frame count is preserved, equal neighbours re-merge."""
    corrupted, _ = corrupt_with_report(alignment, tier, rng, confusion, silence)
    return corrupted
