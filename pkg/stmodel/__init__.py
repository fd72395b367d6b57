from .config import ArchConfig
from .variants import VARIANTS, InputKind, ModelVariant, SourceTokens, TargetKind, VariantTag, get_variant
from .batch import SourceBatch, SourceItem, collate_sources
from .encoder import EncoderOutput, encode
from .attention import attend
from .speller import DecoderState, decode_step, init_state
from .model import Seq2Seq
from .inputs import ModelResources, build_source, build_target, phone_tokens, reference_texts

__all__ = [
    "ArchConfig",
    "VARIANTS",
    "InputKind",
    "ModelVariant",
    "SourceTokens",
    "TargetKind",
    "VariantTag",
    "get_variant",
    "SourceBatch",
    "SourceItem",
    "collate_sources",
    "EncoderOutput",
    "encode",
    "attend",
    "DecoderState",
    "decode_step",
    "init_state",
    "Seq2Seq",
    "ModelResources",
    "build_source",
    "build_target",
    "phone_tokens",
    "reference_texts",
]
