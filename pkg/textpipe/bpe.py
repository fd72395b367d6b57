"""Byte-pair encoding: learning, segmentation, decoding and model files.

Words are split into characters plus an end-of-word symbol before
learning, so merges never cross word boundaries and word-final pieces are
distinguishable. Segmented output marks every non-final piece of a word with
the continuation marker ``@@``.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

from numcore.errors import ParameterError, ParseError

from .vocab import UNK, Vocabulary

logger = logging.getLogger(__name__)

END_OF_WORD = "</w>"
CONTINUATION = "@@"
BPE_FILE_HEADER = "#version: phonest-bpe 1"
DEFAULT_MERGES = 1000

Pair = Tuple[str, str]


@dataclass
class BpeModel:
    merges: List[Pair]
    vocab: Vocabulary = field(default_factory=Vocabulary)
    marker: str = CONTINUATION

    def __post_init__(self) -> None:
        self._ranks: Dict[Pair, int] = {pair: i for i, pair in enumerate(self.merges)}
        self._alphabet = {c for c in self.vocab.tokens if len(c) == 1}

    def segment(self, word: str) -> List[str]:
        return bpe_apply(word, self)

    def encode_line(self, text: str) -> List[str]:
        pieces: List[str] = []
        for word in text.split():
            pieces.extend(bpe_apply(word, self))
        return pieces

    def encode_ids(self, text: str, add_eos: bool = True) -> List[int]:
        return self.vocab.encode(self.encode_line(text), add_eos=add_eos)

    def decode_ids(self, ids: Sequence[int]) -> str:
        return bpe_decode(self.vocab.decode(ids), self.marker)

    def save(self, merges_path: Path, vocab_path: Path) -> None:
        merges_path = Path(merges_path)
        merges_path.parent.mkdir(parents=True, exist_ok=True)
        lines = [BPE_FILE_HEADER] + [f"{a} {b}" for a, b in self.merges]
        merges_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.vocab.save(vocab_path)

    @classmethod
    def load(cls, merges_path: Path, vocab_path: Path) -> "BpeModel":
        merges_path = Path(merges_path)
        lines = merges_path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].strip() != BPE_FILE_HEADER:
            raise ParseError(f"missing BPE header {BPE_FILE_HEADER!r}", str(merges_path), 1)
        merges: List[Pair] = []
        for line_number, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2 or not all(parts):
                raise ParseError("expected two space-separated symbols", str(merges_path), line_number)
            merges.append((parts[0], parts[1]))
        return cls(merges=merges, vocab=Vocabulary.load(vocab_path))


def _word_counts(corpus: Union[Mapping[str, int], Iterable[str]]) -> Counter:
    if isinstance(corpus, Mapping):
        return Counter({w: int(c) for w, c in corpus.items() if w and c > 0})
    counts: Counter = Counter()
    for line in corpus:
        counts.update(line.split())
    return counts


def _merge_word(symbols: Tuple[str, ...], pair: Pair) -> Tuple[str, ...]:
    merged: List[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            merged.append(pair[0] + pair[1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


def _pair_counts(words: Mapping[Tuple[str, ...], int]) -> Counter:
    counts: Counter = Counter()
    for symbols, freq in words.items():
        for a, b in zip(symbols, symbols[1:]):
            counts[(a, b)] += freq
    return counts


def _build_vocab(alphabet: Iterable[str], merges: Sequence[Pair], marker: str) -> Vocabulary:
    vocab = Vocabulary()
    for char in sorted(alphabet):
        vocab.add(char)
        vocab.add(char + marker)
    for a, b in merges:
        symbol = a + b
        if symbol.endswith(END_OF_WORD):
            vocab.add(symbol[: -len(END_OF_WORD)])
        else:
            vocab.add(symbol + marker)
            vocab.add(symbol)
    return vocab


def bpe_learn(
    corpus: Union[Mapping[str, int], Iterable[str]],
    n_merges: int = DEFAULT_MERGES,
    marker: str = CONTINUATION,
) -> BpeModel:
    """Greedy most-frequent-pair merging; ties go to the lexicographically smallest pair."""
    if n_merges < 0:
        raise ParameterError(f"n_merges must be non-negative, got {n_merges}")
    counts = _word_counts(corpus)
    if not counts:
        raise ParameterError("cannot learn BPE from an empty corpus")
    words: Dict[Tuple[str, ...], int] = {tuple(w) + (END_OF_WORD,): c for w, c in counts.items()}
    alphabet = {c for w in counts for c in w}

    merges: List[Pair] = []
    for _ in range(n_merges):
        pairs = _pair_counts(words)
        if not pairs:
            break
        best_count = max(pairs.values())
        if best_count < 2:
            break
        best = min(p for p, c in pairs.items() if c == best_count)
        merges.append(best)
        merged: Dict[Tuple[str, ...], int] = {}
        for symbols, freq in words.items():
            key = _merge_word(symbols, best)
            merged[key] = merged.get(key, 0) + freq
        words = merged
    logger.info("Learned %d BPE merges over %d word types", len(merges), len(counts))
    return BpeModel(merges=merges, vocab=_build_vocab(alphabet, merges, marker), marker=marker)


def bpe_apply(word: str, model: BpeModel) -> List[str]:
    """Segment one word by replaying the merges in learned order."""
    if not word:
        return []
    symbols: Tuple[str, ...] = tuple(c if c in model._alphabet else UNK for c in word) + (END_OF_WORD,)
    for pair in model.merges:
        if len(symbols) == 1:
            break
        if pair[0] in symbols:
            symbols = _merge_word(symbols, pair)
    pieces = list(symbols)
    if pieces[-1] == END_OF_WORD:
        pieces.pop()
    else:
        pieces[-1] = pieces[-1][: -len(END_OF_WORD)]
    return [p + model.marker for p in pieces[:-1]] + pieces[-1:]


def bpe_decode(subwords: Sequence[str], marker: str = CONTINUATION) -> str:
    words: List[str] = []
    current = ""
    for piece in subwords:
        if piece.endswith(marker):
            current += piece[: -len(marker)]
        else:
            words.append(current + piece)
            current = ""
    if current:
        words.append(current)
    return " ".join(words)
