"""Run configuration for one training job."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, model_validator

from phonesup.quality import TierName
from stmodel.config import ArchConfig
from stmodel.variants import VariantTag

MAX_SOURCE_FRAMES = 1500
DEFAULT_FRAME_BUDGET = 6000


class RunConfig(BaseModel):
    schema_version: int = 1
    variant: VariantTag = VariantTag.BASELINE_E2E
    corpus_dir: Optional[str] = Field(default=None, description="Corpus directory written by `synth`")
    output_dir: Optional[str] = Field(default=None, description="Where the checkpoint, vocabularies and logs go")
    tier: TierName = TierName.GOLD
    seed: int = 0
    train_fraction: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    train_size: Optional[int] = Field(default=None, ge=1)
    frame_budget: int = Field(default=DEFAULT_FRAME_BUDGET, ge=1, description="Total source frames per batch")
    max_source_frames: int = Field(default=MAX_SOURCE_FRAMES, ge=1)
    max_epochs: int = Field(default=100, ge=1)
    lr: float = Field(default=0.0003, gt=0.0)
    decay: float = Field(default=0.5, gt=0.0, lt=1.0)
    first_patience: int = Field(default=10, ge=1)
    patience: int = Field(default=5, ge=1)
    min_lr: float = Field(default=1e-5, gt=0.0)
    bpe_merges: int = Field(default=1000, ge=0)
    collapse_phones: bool = True
    cmvn: bool = True
    validate_each_epoch: bool = Field(default=True, description="Decode dev each epoch; off means keep the last epoch")
    beam: int = Field(default=15, ge=1)
    alpha: float = Field(default=1.5, ge=0.0)
    max_dev_utterances: Optional[int] = Field(default=None, ge=1)
    arch: ArchConfig = Field(default_factory=ArchConfig)

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.train_fraction is not None and self.train_size is not None:
            raise ValueError("give at most one of train_fraction and train_size")
        if self.min_lr >= self.lr:
            raise ValueError(f"min_lr {self.min_lr} must be below the initial lr {self.lr}")
        return self
