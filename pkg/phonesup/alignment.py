"""Frame-level phone alignments and their segment view."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import groupby
from typing import Dict, Iterable, List, Sequence

import numpy as np

from numcore.errors import ContractError, VocabIndexError

SILENCE = "sil"


@dataclass(frozen=True)
class Segment:
    label: str
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


def segments(labels: Sequence[str]) -> List[Segment]:
    """Maximal runs of identical labels as (label, start, length)."""
    result: List[Segment] = []
    start = 0
    for label, run in groupby(labels):
        length = sum(1 for _ in run)
        result.append(Segment(label, start, length))
        start += length
    return result


def expand(segs: Iterable[Segment]) -> List[str]:
    labels: List[str] = []
    for seg in segs:
        if seg.length < 1:
            raise ContractError(f"segment {seg} has non-positive length")
        labels.extend([seg.label] * seg.length)
    return labels


def collapse_runs(labels: Sequence[str]) -> List[str]:
    return [label for label, _ in groupby(labels)]


@dataclass
class PhoneAlignment:
    utt_id: str
    labels: List[str]
    _segments: List[Segment] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.labels = list(self.labels)

    @property
    def num_frames(self) -> int:
        return len(self.labels)

    @property
    def segments(self) -> List[Segment]:
        if self._segments is None:
            self._segments = segments(self.labels)
        return self._segments

    def collapsed(self) -> List[str]:
        return collapse_runs(self.labels)

    def boundaries(self) -> List[int]:
        """Start frames of every segment after the first."""
        return [seg.start for seg in self.segments[1:]]

    @classmethod
    def from_segments(cls, utt_id: str, segs: Iterable[Segment]) -> "PhoneAlignment":
        return cls(utt_id, expand(segs))


class PhoneInventory:
    """Ordered phone label set with silence; maps labels to embedding row ids."""

    def __init__(self, phones: Sequence[str], silence: str = SILENCE) -> None:
        ordered = list(dict.fromkeys(phones))
        if silence not in ordered:
            ordered.append(silence)
        self.phones: List[str] = ordered
        self.silence = silence
        self._index: Dict[str, int] = {p: i for i, p in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self.phones)

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def id(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise VocabIndexError(f"unknown phone label: {label!r}") from None

    def encode(self, labels: Sequence[str]) -> np.ndarray:
        return np.asarray([self.id(label) for label in labels], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"phones": self.phones, "silence": self.silence}

    @classmethod
    def from_dict(cls, data: dict) -> "PhoneInventory":
        return cls(data["phones"], data.get("silence", SILENCE))
