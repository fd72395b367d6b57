"""Token vocabularies with reserved special ids."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from numcore.errors import ParseError, VocabIndexError

logger = logging.getLogger(__name__)

PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)


class Vocabulary:
    """Token <-> id map; ids 0..3 are pad, bos, eos, unk."""

    pad_id = 0
    bos_id = 1
    eos_id = 2
    unk_id = 3

    def __init__(self, tokens: Iterable[str] = ()) -> None:
        self.tokens: List[str] = list(SPECIALS)
        self._index: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        if token not in self._index:
            self._index[token] = len(self.tokens)
            self.tokens.append(token)
        return self._index[token]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def id(self, token: str) -> int:
        return self._index.get(token, self.unk_id)

    def token(self, index: int) -> str:
        if not 0 <= index < len(self.tokens):
            raise VocabIndexError(f"token id {index} outside vocabulary of {len(self.tokens)}")
        return self.tokens[index]

    def encode(self, tokens: Sequence[str], add_eos: bool = False) -> List[int]:
        ids = [self.id(t) for t in tokens]
        if add_eos:
            ids.append(self.eos_id)
        return ids

    def decode(self, ids: Sequence[int], strip_special: bool = True) -> List[str]:
        out: List[str] = []
        for index in ids:
            index = int(index)
            if index == self.eos_id and strip_special:
                break
            if strip_special and index in (self.pad_id, self.bos_id):
                continue
            out.append(self.token(index))
        return out

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{t}\t{i}\n" for i, t in enumerate(self.tokens)), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        path = Path(path)
        pairs = []
        for line_number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected 'subword<TAB>id'", str(path), line_number)
            try:
                pairs.append((int(parts[1]), parts[0]))
            except ValueError:
                raise ParseError(f"bad id {parts[1]!r}", str(path), line_number) from None
        pairs.sort()
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise ParseError("vocabulary ids must be contiguous from 0", str(path))
        if tuple(t for _, t in pairs[: len(SPECIALS)]) != SPECIALS:
            raise ParseError(f"vocabulary must start with {SPECIALS}", str(path))
        return cls(t for _, t in pairs[len(SPECIALS):])
