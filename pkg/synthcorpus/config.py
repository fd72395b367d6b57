"""Synthetic corpus settings."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

# Source graphemes; phone i is spelled GRAPHEMES[i].
GRAPHEMES = tuple("abcdefghijklmnopqrstuvwxyz") + ("á", "é", "í", "ó", "ú", "ñ", "ü", "à", "è", "ò")

FRAMES_PER_SECOND = 100


class SynthConfig(BaseModel):
    schema_version: int = 1
    n_phones: int = Field(default=30, ge=2, le=len(GRAPHEMES), description="Phone inventory size, silence excluded")
    lexicon_size: int = Field(default=50, ge=1)
    word_phones_min: int = Field(default=2, ge=1)
    word_phones_max: int = Field(default=4, ge=1)
    sentence_min: int = Field(default=3, ge=1)
    sentence_max: int = Field(default=8, ge=1)
    duration_min: int = Field(default=5, ge=1, le=100)
    duration_max: int = Field(default=20, ge=1, le=100)
    duration_mean: float = Field(default=8.0, description="Mean phone duration in frames")
    feature_dim: int = Field(default=40, ge=1)
    noise_sigma: float = Field(default=0.3, ge=0.0)
    coarticulation_width: int = Field(default=2, ge=0)
    reorder_prob: float = Field(default=0.3, ge=0.0, le=1.0)
    n_speakers: int = Field(default=8, ge=1)
    speaker_shift: float = Field(default=0.0, ge=0.0, description="Scale of per-speaker feature offsets")
    train_size: int = Field(default=2000, ge=1)
    dev_size: int = Field(default=200, ge=1)
    test_size: int = Field(default=200, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_ranges(self) -> "SynthConfig":
        if self.duration_min > self.duration_max:
            raise ValueError(f"duration_min {self.duration_min} > duration_max {self.duration_max}")
        if not self.duration_min <= self.duration_mean <= self.duration_max:
            raise ValueError("duration_mean must lie within [duration_min, duration_max]")
        if self.word_phones_min > self.word_phones_max:
            raise ValueError("word_phones_min > word_phones_max")
        if self.sentence_min > self.sentence_max:
            raise ValueError("sentence_min > sentence_max")
        distinct = sum(
            self.n_phones * (self.n_phones - 1) ** (k - 1)
            for k in range(self.word_phones_min, self.word_phones_max + 1)
        )
        if self.lexicon_size > distinct:
            raise ValueError(f"lexicon_size {self.lexicon_size} exceeds the {distinct} distinct phone strings")
        return self

    @property
    def split_sizes(self) -> dict:
        return {"train": self.train_size, "dev": self.dev_size, "test": self.test_size}
