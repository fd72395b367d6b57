from .models import DecodeResult, Hypothesis
from .beam import DEFAULT_ALPHA, DEFAULT_BEAM, beam_search, default_max_len, greedy_decode, norm_score, score_sequence
from .cascade import (
    AlignmentStage,
    ModelStage,
    Stage,
    StageOutput,
    Translation,
    Translator,
    cascade_corpus,
    cascade_translate,
    check_stage_vocabularies,
    translate_corpus,
)

__all__ = [
    "DecodeResult",
    "Hypothesis",
    "DEFAULT_ALPHA",
    "DEFAULT_BEAM",
    "beam_search",
    "default_max_len",
    "greedy_decode",
    "norm_score",
    "score_sequence",
    "AlignmentStage",
    "ModelStage",
    "Stage",
    "StageOutput",
    "Translation",
    "Translator",
    "cascade_corpus",
    "cascade_translate",
    "check_stage_vocabularies",
    "translate_corpus",
]
