"""Beam-search currency."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple


@dataclass(frozen=True)
class Hypothesis:
    """Token ids after <s>; a finished hypothesis ends with </s>."""

    tokens: Tuple[int, ...]
    logprob: float
    score: float
    finished: bool = False
    hit_max_len: bool = False

    @property
    def length(self) -> int:
        return len(self.tokens)

    def to_dict(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "logprob": self.logprob,
            "score": self.score,
            "finished": self.finished,
            "hit_max_len": self.hit_max_len,
        }


@dataclass
class DecodeResult:
    best: Hypothesis
    nbest: List[Hypothesis] = field(default_factory=list)
    max_len: int = 0

    @property
    def hit_max_len(self) -> bool:
        return self.best.hit_max_len
