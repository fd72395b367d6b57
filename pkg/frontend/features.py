"""FeatureMatrix, WAV input and the feature JSON-lines format."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Optional

import numpy as np
from scipy.io import wavfile

from numcore.errors import ParseError, ShapeError

from .dsp import DEFAULT_HOP_MS, DEFAULT_N_MELS, DEFAULT_SAMPLE_RATE, DEFAULT_WINDOW_MS, frame_signal, log_mel_frames

logger = logging.getLogger(__name__)

# Written precision of feature values in JSON-lines files.
FEATURE_DECIMALS = 6


@dataclass
class FeatureMatrix:
    utt_id: str
    speaker: str
    frames: np.ndarray
    window_ms: float = DEFAULT_WINDOW_MS
    hop_ms: float = DEFAULT_HOP_MS
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.size == 0:
            self.frames = self.frames.reshape(0, self.frames.shape[-1] if self.frames.ndim == 2 else DEFAULT_N_MELS)
        if self.frames.ndim != 2:
            raise ShapeError(f"features of {self.utt_id} must be a T x d matrix", self.frames.shape)
        if not np.all(np.isfinite(self.frames)):
            raise ParseError(f"non-finite feature value in {self.utt_id}")

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])

    def with_frames(self, frames: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.utt_id, self.speaker, frames, self.window_ms, self.hop_ms, self.sample_rate)

    def to_dict(self) -> dict:
        return {
            "id": self.utt_id,
            "speaker": self.speaker,
            "window_ms": self.window_ms,
            "hop_ms": self.hop_ms,
            "sample_rate": self.sample_rate,
            "frames": np.round(self.frames, FEATURE_DECIMALS).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureMatrix":
        return cls(
            utt_id=str(data["id"]),
            speaker=str(data["speaker"]),
            frames=np.asarray(data["frames"], dtype=np.float64),
            window_ms=float(data.get("window_ms", DEFAULT_WINDOW_MS)),
            hop_ms=float(data.get("hop_ms", DEFAULT_HOP_MS)),
            sample_rate=int(data.get("sample_rate", DEFAULT_SAMPLE_RATE)),
        )


def read_wav(path: Path) -> tuple:
    """Read 16-bit mono PCM; samples are scaled to [-1, 1)."""
    sample_rate, data = wavfile.read(str(path))
    if data.dtype != np.int16:
        raise ParseError(f"expected 16-bit PCM, got {data.dtype}", str(path))
    if data.ndim != 1:
        raise ParseError(f"expected mono audio, got {data.shape[1]} channels", str(path))
    return int(sample_rate), data.astype(np.float64) / 32768.0


def extract_features(
    utt_id: str,
    speaker: str,
    samples: np.ndarray,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    window_ms: float = DEFAULT_WINDOW_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    n_mels: int = DEFAULT_N_MELS,
) -> FeatureMatrix:
    frames = frame_signal(samples, sample_rate, window_ms, hop_ms)
    if frames.too_short:
        logger.warning("Utterance %s yields no frames", utt_id)
    return FeatureMatrix(
        utt_id=utt_id,
        speaker=speaker,
        frames=log_mel_frames(frames, sample_rate, n_mels),
        window_ms=window_ms,
        hop_ms=hop_ms,
        sample_rate=sample_rate,
    )


def extract_wav(utt_id: str, speaker: str, path: Path, n_mels: int = DEFAULT_N_MELS) -> FeatureMatrix:
    sample_rate, samples = read_wav(path)
    return extract_features(utt_id, speaker, samples, sample_rate, n_mels=n_mels)


class FeatureStore:
    """JSON-lines feature file: one {id, speaker, frames} record per utterance."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)

    def write_all(self, features: Iterable[FeatureMatrix]) -> int:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with self.path.open("w", encoding="utf-8") as handle:
            for item in features:
                handle.write(json.dumps(item.to_dict()) + "\n")
                count += 1
        logger.info("Wrote %d feature records to %s", count, self.path)
        return count

    def iter_records(self) -> Iterator[FeatureMatrix]:
        if not self.path.exists():
            raise ParseError("feature file not found", str(self.path))
        with self.path.open("r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    yield FeatureMatrix.from_dict(json.loads(line))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"bad feature record: {exc}", str(self.path), line_number) from exc

    def read_all(self, dim: Optional[int] = None) -> List[FeatureMatrix]:
        records = list(self.iter_records())
        if dim is not None:
            for record in records:
                if record.num_frames and record.dim != dim:
                    raise ShapeError(f"feature dimension mismatch in {record.utt_id}", (record.dim,), (dim,))
        return records
