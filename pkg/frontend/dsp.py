"""Framing and log-Mel filterbank analysis."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from numcore.errors import ContractError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 8000
DEFAULT_WINDOW_MS = 25.0
DEFAULT_HOP_MS = 10.0
DEFAULT_N_MELS = 40
LOG_FLOOR = 1e-10


@dataclass
class Frames:
    """Hamming-windowed frames (n x W) plus a flag for signals shorter than one window."""

    frames: np.ndarray
    window: int
    hop: int
    too_short: bool = False

    def __len__(self) -> int:
        return int(self.frames.shape[0])


def window_length(sample_rate: int, window_ms: float) -> int:
    return int(round(window_ms * sample_rate / 1000.0))


def frame_signal(
    samples: np.ndarray,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    window_ms: float = DEFAULT_WINDOW_MS,
    hop_ms: float = DEFAULT_HOP_MS,
) -> Frames:
    if sample_rate <= 0:
        raise ParameterError(f"sample_rate must be positive, got {sample_rate}")
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    win = window_length(sample_rate, window_ms)
    hop = window_length(sample_rate, hop_ms)
    if win < 1 or hop < 1:
        raise ParameterError(f"window/hop too small for {sample_rate} Hz: {window_ms} ms / {hop_ms} ms")
    n = samples.shape[0]
    if n < win:
        logger.warning("Signal of %d samples is shorter than one %d-sample window", n, win)
        return Frames(frames=np.zeros((0, win)), window=win, hop=hop, too_short=True)
    count = 1 + (n - win) // hop
    index = np.arange(win)[None, :] + hop * np.arange(count)[:, None]
    return Frames(frames=samples[index] * np.hamming(win), window=win, hop=hop)


def hz_to_mel(freq):
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def fft_size(window: int) -> int:
    return 1 << (int(window) - 1).bit_length()


def mel_center_frequencies(sample_rate: int, n_mels: int = DEFAULT_N_MELS) -> np.ndarray:
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    return edges[1:-1]


@lru_cache(maxsize=16)
def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int = DEFAULT_N_MELS) -> np.ndarray:
    """Triangular filters (n_fft//2+1 x n_mels) spanning 0 Hz to Nyquist, peak weight 1."""
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    bins = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower = edges[:-2][None, :]
    center = edges[1:-1][None, :]
    upper = edges[2:][None, :]
    f = bins[:, None]
    rising = (f - lower) / (center - lower)
    falling = (upper - f) / (upper - center)
    bank = np.maximum(0.0, np.minimum(rising, falling))
    bank.setflags(write=False)
    return bank


def log_mel(
    frame: np.ndarray,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    n_mels: int = DEFAULT_N_MELS,
    floor: float = LOG_FLOOR,
    n_fft: Optional[int] = None,
) -> np.ndarray:
    """Log Mel-filtered power spectrum of one (already windowed) frame."""
    frame = np.asarray(frame, dtype=np.float64).reshape(-1)
    if frame.size == 0:
        raise ContractError("log_mel needs a non-empty frame")
    n_fft = n_fft or fft_size(frame.size)
    power = np.abs(np.fft.rfft(frame, n=n_fft)) ** 2
    energies = power @ mel_filterbank(sample_rate, n_fft, n_mels)
    return np.log(np.maximum(energies, floor))


def log_mel_frames(frames: Frames, sample_rate: int, n_mels: int = DEFAULT_N_MELS) -> np.ndarray:
    if len(frames) == 0:
        return np.zeros((0, n_mels))
    n_fft = fft_size(frames.window)
    power = np.abs(np.fft.rfft(frames.frames, n=n_fft, axis=1)) ** 2
    return np.log(np.maximum(power @ mel_filterbank(sample_rate, n_fft, n_mels), LOG_FLOOR))
