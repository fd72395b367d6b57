"""Per-variant encoder inputs and decoder targets built from utterances."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from numcore.errors import ContractError, ParameterError
from phonesup.alignment import PhoneAlignment, PhoneInventory
from phonesup.transforms import average_by_segment
from synthcorpus.models import Utterance
from textpipe.bpe import BpeModel, bpe_learn
from textpipe.normalize import normalize
from textpipe.vocab import Vocabulary

from .batch import SourceItem
from .variants import InputKind, ModelVariant, SourceTokens, TargetKind

logger = logging.getLogger(__name__)

INVENTORY_FILE = "phones.json"


def phone_tokens(alignment: PhoneAlignment, collapse: bool = True) -> List[str]:
    """Phone token stream: one token per segment, or one per frame when not collapsed."""
    return alignment.collapsed() if collapse else list(alignment.labels)


def target_text(utterance: Utterance, kind: TargetKind) -> str:
    if kind is TargetKind.TRANSCRIPT_BPE:
        return normalize(utterance.source)
    return normalize(utterance.references[0])


def reference_texts(utterance: Utterance, kind: TargetKind) -> List[str]:
    if kind is TargetKind.TRANSCRIPT_BPE:
        return [normalize(utterance.source)]
    return [normalize(ref) for ref in utterance.references]


@dataclass
class ModelResources:
    """Vocabularies and BPE models one trained model depends on."""

    target_bpe: BpeModel
    inventory: PhoneInventory
    source_bpe: Optional[BpeModel] = None
    phone_vocab: Optional[Vocabulary] = None

    @classmethod
    def build(
        cls,
        variant: ModelVariant,
        train: Sequence[Utterance],
        inventory: PhoneInventory,
        merges: int,
    ) -> "ModelResources":
        if not train:
            raise ParameterError("cannot build vocabularies from an empty training split")
        target_lines: List[str] = []
        for utt in train:
            target_lines.extend(reference_texts(utt, variant.target_kind))
        resources = cls(target_bpe=bpe_learn(target_lines, merges), inventory=inventory)
        if variant.source_tokens is SourceTokens.TRANSCRIPT_BPE:
            resources.source_bpe = transcript_bpe(train, merges)
        if variant.source_tokens is SourceTokens.PHONES:
            resources.phone_vocab = Vocabulary(inventory.phones)
        logger.info(
            "%s vocabularies: target=%d source=%d",
            variant.tag.value,
            len(resources.target_bpe.vocab),
            len(resources.source_vocab) if resources.source_vocab is not None else 0,
        )
        return resources

    @property
    def target_vocab(self) -> Vocabulary:
        return self.target_bpe.vocab

    @property
    def source_vocab(self) -> Optional[Vocabulary]:
        if self.source_bpe is not None:
            return self.source_bpe.vocab
        return self.phone_vocab

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.target_bpe.save(directory / "target.bpe", directory / "target.vocab")
        if self.source_bpe is not None:
            self.source_bpe.save(directory / "source.bpe", directory / "source.vocab")
        elif self.phone_vocab is not None:
            self.phone_vocab.save(directory / "source.vocab")
        (directory / INVENTORY_FILE).write_text(json.dumps(self.inventory.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory: Path) -> "ModelResources":
        directory = Path(directory)
        inventory = PhoneInventory.from_dict(json.loads((directory / INVENTORY_FILE).read_text(encoding="utf-8")))
        resources = cls(
            target_bpe=BpeModel.load(directory / "target.bpe", directory / "target.vocab"),
            inventory=inventory,
        )
        if (directory / "source.bpe").exists():
            resources.source_bpe = BpeModel.load(directory / "source.bpe", directory / "source.vocab")
        elif (directory / "source.vocab").exists():
            resources.phone_vocab = Vocabulary.load(directory / "source.vocab")
        return resources


def transcript_bpe(train: Sequence[Utterance], merges: int) -> BpeModel:
    """BPE over normalised transcripts; shared by ASR targets and text-MT sources."""
    return bpe_learn([normalize(utt.source) for utt in train], merges)


def build_source(
    variant: ModelVariant,
    utterance: Utterance,
    resources: ModelResources,
    collapse_phones: bool = True,
) -> SourceItem:
    """Encoder input for one utterance under the variant's input spec.

    Feature-based variants read the utterance's features and its (possibly
    degraded) alignment; token variants read the transcript or the phones.
    """
    kind = variant.input_kind
    frames = utterance.features.frames
    if kind is InputKind.FRAMES:
        return SourceItem(features=frames)
    if kind is InputKind.FRAMES_PHONE_FACTOR:
        return SourceItem(features=frames, phone_ids=resources.inventory.encode(utterance.alignment.labels))
    if kind is InputKind.SEGMENT_AVERAGED:
        return SourceItem(features=average_by_segment(frames, utterance.alignment.labels))
    if variant.source_tokens is SourceTokens.TRANSCRIPT_BPE:
        return tokens_source(resources.source_bpe.encode_line(normalize(utterance.source)), resources.source_vocab)
    return tokens_source(phone_tokens(utterance.alignment, collapse_phones), resources.source_vocab)


def tokens_source(tokens: Sequence[str], vocab: Vocabulary) -> SourceItem:
    if not tokens:
        raise ContractError("token source is empty")
    return SourceItem(tokens=np.asarray(vocab.encode(tokens), dtype=np.int64))


def build_target(variant: ModelVariant, utterance: Utterance, resources: ModelResources) -> List[int]:
    return resources.target_bpe.encode_ids(target_text(utterance, variant.target_kind), add_eos=True)
