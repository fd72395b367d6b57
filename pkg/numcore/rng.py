"""Seeded, splittable random streams.

A stream is addressed by a root seed plus a path of keys, e.g.
``derive(7, "corpus", "utt", 12)``. The same address always yields the same
generator, independent of which other streams were drawn before.
"""

from __future__ import annotations

import hashlib
from typing import List, Union

import numpy as np

Key = Union[str, int]


def _key_words(key: Key) -> int:
    digest = hashlib.sha256(repr(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def stream_seed(seed: int, *keys: Key) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_words(k) for k in keys))


def derive(seed: int, *keys: Key) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, *keys))


def derive_int(seed: int, *keys: Key) -> int:
    """A child seed as a plain int, for handing to worker processes."""
    return int(stream_seed(seed, *keys).generate_state(1, dtype=np.uint32)[0])


def split(rng: np.random.Generator, n: int) -> List[np.random.Generator]:
    seeds = rng.integers(0, 2**63 - 1, size=n, dtype=np.int64)
    return [np.random.default_rng(int(s)) for s in seeds]
