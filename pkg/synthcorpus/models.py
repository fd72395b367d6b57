"""Corpus data model: lexicon, utterances, splits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from frontend.features import FeatureMatrix
from numcore.errors import ConsistencyError, ParameterError
from phonesup.alignment import PhoneAlignment, PhoneInventory
from phonesup.quality import ConfusionTable

SPLITS = ("train", "dev", "test")


@dataclass
class LexiconEntry:
    spelling: str
    phones: List[str]
    target: str

    def to_dict(self) -> dict:
        return {"spelling": self.spelling, "phones": self.phones, "target": self.target}

    @classmethod
    def from_dict(cls, data: dict) -> "LexiconEntry":
        return cls(data["spelling"], list(data["phones"]), data["target"])


@dataclass
class Lexicon:
    entries: List[LexiconEntry]

    def __post_init__(self) -> None:
        targets = [e.target for e in self.entries]
        spellings = [e.spelling for e in self.entries]
        if len(set(targets)) != len(targets) or len(set(spellings)) != len(spellings):
            raise ParameterError("lexicon must map words to target tokens one-to-one")
        self._by_spelling = {e.spelling: e for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, spelling: str) -> LexiconEntry:
        return self._by_spelling[spelling]

    def translate(self, words: List[str], swaps: List[int]) -> List[str]:
        """Lexicon image of a word sequence with the recorded adjacent swaps applied."""
        out = [self.lookup(w).target for w in words]
        for i in swaps:
            out[i], out[i + 1] = out[i + 1], out[i]
        return out

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, data: dict) -> "Lexicon":
        return cls([LexiconEntry.from_dict(e) for e in data["entries"]])


@dataclass
class Utterance:
    utt_id: str
    speaker: str
    features: FeatureMatrix
    alignment: PhoneAlignment
    source: str
    references: List[str]
    swaps: List[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.alignment.num_frames != self.features.num_frames:
            raise ConsistencyError(
                f"alignment has {self.alignment.num_frames} frames, features {self.features.num_frames}",
                self.utt_id,
            )

    @property
    def num_frames(self) -> int:
        return self.features.num_frames

    def with_alignment(self, alignment: PhoneAlignment) -> "Utterance":
        return Utterance(self.utt_id, self.speaker, self.features, alignment, self.source, self.references, self.swaps)

    def with_features(self, features: FeatureMatrix) -> "Utterance":
        return Utterance(self.utt_id, self.speaker, features, self.alignment, self.source, self.references, self.swaps)


@dataclass
class Corpus:
    splits: Dict[str, List[Utterance]]
    inventory: PhoneInventory
    lexicon: Optional[Lexicon] = None
    prototypes: Dict[str, np.ndarray] = field(default_factory=dict)
    config: Optional[dict] = None

    def split(self, name: str) -> List[Utterance]:
        try:
            return self.splits[name]
        except KeyError:
            raise ParameterError(f"corpus has no split {name!r}") from None

    def __iter__(self) -> Iterator[Utterance]:
        for name in SPLITS:
            yield from self.splits.get(name, [])

    def confusion_table(self) -> ConfusionTable:
        if self.prototypes:
            return ConfusionTable.from_prototypes(self.prototypes, silence=self.inventory.silence)
        return ConfusionTable.uniform(self.inventory.phones, self.inventory.silence)

    def with_train(self, train: List[Utterance]) -> "Corpus":
        splits = dict(self.splits)
        splits["train"] = train
        return Corpus(splits, self.inventory, self.lexicon, self.prototypes, self.config)
