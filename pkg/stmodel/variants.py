"""Model variants: what the encoder reads and what the decoder writes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict

from numcore.errors import ParameterError


class VariantTag(str, Enum):
    BASELINE_E2E = "baseline_e2e"
    PHONE_E2E = "phone_e2e"
    PHONE_AVG_E2E = "phone_avg_e2e"
    MT_OVER_TEXT = "mt_over_text"
    MT_OVER_PHONES = "mt_over_phones"
    ASR_BPE = "asr_bpe"
    ASR_PHONE_AVG = "asr_phone_avg"


class InputKind(str, Enum):
    FRAMES = "frames"
    FRAMES_PHONE_FACTOR = "frames_phone_factor"
    SEGMENT_AVERAGED = "segment_averaged"
    TOKENS = "tokens"


class TargetKind(str, Enum):
    TRANSLATION_BPE = "translation_bpe"
    TRANSCRIPT_BPE = "transcript_bpe"


class SourceTokens(str, Enum):
    NONE = "none"
    TRANSCRIPT_BPE = "transcript_bpe"
    PHONES = "phones"


@dataclass(frozen=True)
class ModelVariant:
    tag: VariantTag
    input_kind: InputKind
    target_kind: TargetKind
    source_tokens: SourceTokens = SourceTokens.NONE

    @property
    def is_discrete(self) -> bool:
        return self.input_kind is InputKind.TOKENS

    @property
    def uses_alignment(self) -> bool:
        return self.input_kind in (InputKind.FRAMES_PHONE_FACTOR, InputKind.SEGMENT_AVERAGED) or (
            self.source_tokens is SourceTokens.PHONES
        )

    def input_width(self, feature_dim: int, embedding_dim: int) -> int:
        if self.input_kind is InputKind.FRAMES_PHONE_FACTOR:
            return feature_dim + embedding_dim
        if self.input_kind is InputKind.TOKENS:
            return embedding_dim
        return feature_dim


VARIANTS: Dict[VariantTag, ModelVariant] = {
    VariantTag.BASELINE_E2E: ModelVariant(VariantTag.BASELINE_E2E, InputKind.FRAMES, TargetKind.TRANSLATION_BPE),
    VariantTag.PHONE_E2E: ModelVariant(VariantTag.PHONE_E2E, InputKind.FRAMES_PHONE_FACTOR, TargetKind.TRANSLATION_BPE),
    VariantTag.PHONE_AVG_E2E: ModelVariant(VariantTag.PHONE_AVG_E2E, InputKind.SEGMENT_AVERAGED, TargetKind.TRANSLATION_BPE),
    VariantTag.MT_OVER_TEXT: ModelVariant(
        VariantTag.MT_OVER_TEXT, InputKind.TOKENS, TargetKind.TRANSLATION_BPE, SourceTokens.TRANSCRIPT_BPE
    ),
    VariantTag.MT_OVER_PHONES: ModelVariant(
        VariantTag.MT_OVER_PHONES, InputKind.TOKENS, TargetKind.TRANSLATION_BPE, SourceTokens.PHONES
    ),
    VariantTag.ASR_BPE: ModelVariant(VariantTag.ASR_BPE, InputKind.FRAMES, TargetKind.TRANSCRIPT_BPE),
    VariantTag.ASR_PHONE_AVG: ModelVariant(VariantTag.ASR_PHONE_AVG, InputKind.SEGMENT_AVERAGED, TargetKind.TRANSCRIPT_BPE),
}


def get_variant(tag: str) -> ModelVariant:
    try:
        return VARIANTS[VariantTag(tag)]
    except ValueError:
        raise ParameterError(f"unknown model variant {tag!r}; expected one of {[t.value for t in VariantTag]}") from None
