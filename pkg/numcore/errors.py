"""Error types shared by every package in the toolkit."""

from __future__ import annotations

from typing import Optional, Sequence


class PhonestError(Exception):
    """Root of all toolkit errors."""


class ShapeError(PhonestError, ValueError):
    """Raised when tensor or matrix extents do not agree."""

    def __init__(self, message: str, *shapes: Sequence[int]) -> None:
        self.shapes = [tuple(s) for s in shapes]
        if self.shapes:
            message = f"{message} (shapes: {', '.join(str(s) for s in self.shapes)})"
        super().__init__(message)


class ContractError(PhonestError, ValueError):
    """Raised when an operation's pre-condition is violated."""


class ParameterError(PhonestError, ValueError):
    """Raised for invalid hyper-parameters or configuration values."""


class VocabIndexError(PhonestError, IndexError):
    """Raised when a token, label or target id is out of range."""


class ParseError(PhonestError, ValueError):
    """Raised when an input file cannot be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line_number: Optional[int] = None) -> None:
        self.path = path
        self.line_number = line_number
        where = ""
        if path is not None:
            where = f"{path}"
            if line_number is not None:
                where += f":{line_number}"
            where = f" [{where}]"
        super().__init__(f"{message}{where}")


class ConsistencyError(PhonestError, ValueError):
    """Raised when two data sources disagree about one utterance."""

    def __init__(self, message: str, utterance_id: Optional[str] = None) -> None:
        self.utterance_id = utterance_id
        if utterance_id is not None:
            message = f"{message} (utterance {utterance_id})"
        super().__init__(message)


class SpeakerLookupError(PhonestError, KeyError):
    """Raised when normalisation statistics are missing for a speaker."""

    def __init__(self, speaker: str) -> None:
        self.speaker = speaker
        super().__init__(f"No CMVN statistics for speaker: {speaker}")

    def __str__(self) -> str:
        return self.args[0]


class NonFiniteError(PhonestError, FloatingPointError):
    """Raised when a NaN or Inf shows up in a forward or backward value."""
