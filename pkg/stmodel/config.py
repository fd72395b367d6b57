"""Architecture hyper-parameters."""

from __future__ import annotations

from typing import List

from pydantic import BaseModel, Field, model_validator


class ArchConfig(BaseModel):
    schema_version: int = 1
    hidden: int = Field(default=512, ge=1, description="LSTM units per direction")
    encoder_layers: int = Field(default=3, ge=1)
    downsample_after: List[int] = Field(default_factory=lambda: [1, 2], description="Encoder layers followed by a NiN pair projection")
    attention_units: int = Field(default=128, ge=1)
    decoder_layers: int = Field(default=1, ge=1)
    embedding_dim: int = Field(default=64, ge=1)
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    embedding_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    label_smoothing: float = Field(default=0.1, ge=0.0, lt=1.0)
    fix_target_norm: bool = True
    init_scale: float = Field(default=0.1, gt=0.0)

    @model_validator(mode="after")
    def _check_downsampling(self) -> "ArchConfig":
        allowed = set(range(1, self.encoder_layers))
        bad = [p for p in self.downsample_after if p not in allowed]
        if bad:
            raise ValueError(f"downsample positions {bad} not within 1..{self.encoder_layers - 1}")
        if len(set(self.downsample_after)) != len(self.downsample_after):
            raise ValueError("downsample positions must be distinct")
        return self

    @property
    def context_dim(self) -> int:
        return 2 * self.hidden

    def output_length(self, length: int) -> int:
        """Encoder output length for an input of `length` positions."""
        for _ in self.downsample_after:
            length = (length + 1) // 2
        return length
