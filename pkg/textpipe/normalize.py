"""Text normalisation applied to transcripts and translations before BPE and scoring."""

from __future__ import annotations

import unicodedata

APOSTROPHE = "'"
RIGHT_SINGLE_QUOTE = "’"


def _keep(char: str) -> bool:
    return char == APOSTROPHE or not unicodedata.category(char).startswith("P")


def normalize(text: str) -> str:
    """Lowercase, drop punctuation except apostrophes, collapse whitespace."""
    text = text.replace(RIGHT_SINGLE_QUOTE, APOSTROPHE).lower()
    return " ".join("".join(c for c in text if _keep(c)).split())
