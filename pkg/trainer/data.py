"""Corpus preparation for one run: subset, CMVN, alignment quality, examples."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from frontend.cmvn import cmvn
from numcore.errors import ConsistencyError
from numcore.rng import derive
from phonesup.quality import CorruptionReport, QualityTier, corrupt_with_report
from stmodel.batch import SourceItem
from stmodel.inputs import ModelResources, build_source, build_target, reference_texts
from stmodel.variants import ModelVariant
from synthcorpus.models import SPLITS, Corpus, Utterance
from synthcorpus.subset import subset

from .config import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class Example:
    utt_id: str
    source: SourceItem
    target: List[int]
    references: List[str]
    frames: int

    @property
    def length(self) -> int:
        return self.source.length


def check_corpus(corpus: Corpus) -> None:
    """Fail before training when an utterance cannot produce a source/target pair."""
    for utt in corpus:
        if not utt.references or not any(r.strip() for r in utt.references):
            raise ConsistencyError("no reference translation", utt.utt_id)
        if not utt.source.strip():
            raise ConsistencyError("empty source transcript", utt.utt_id)
        if utt.num_frames == 0:
            raise ConsistencyError("no feature frames", utt.utt_id)
        unknown = set(utt.alignment.labels) - set(corpus.inventory.phones)
        if unknown:
            raise ConsistencyError(f"alignment uses labels outside the inventory: {sorted(unknown)}", utt.utt_id)


def select_train(corpus: Corpus, config: RunConfig) -> Corpus:
    if config.train_fraction is not None:
        return subset(corpus, fraction=config.train_fraction, seed=config.seed)
    if config.train_size is not None:
        return subset(corpus, size=config.train_size, seed=config.seed)
    return corpus


def normalize_speakers(corpus: Corpus) -> Corpus:
    """Per-speaker CMVN with statistics pooled over every split."""
    utterances = list(corpus)
    normalized, stats = cmvn([u.features for u in utterances])
    by_id = {feats.utt_id: feats for feats in normalized}
    splits = {
        name: [u.with_features(by_id[u.utt_id]) for u in corpus.splits.get(name, [])]
        for name in corpus.splits
    }
    logger.debug("CMVN over %d speakers", len(stats))
    return Corpus(splits, corpus.inventory, corpus.lexicon, corpus.prototypes, corpus.config)


def degrade_alignments(corpus: Corpus, tier: QualityTier, seed: int) -> Tuple[Corpus, CorruptionReport]:
    """Replace every alignment with its tier-quality version (one RNG stream per utterance)."""
    report = CorruptionReport()
    if tier.is_identity:
        return corpus, report
    confusion = corpus.confusion_table()
    splits: Dict[str, List[Utterance]] = {}
    for name, utterances in corpus.splits.items():
        degraded = []
        for utt in utterances:
            rng = derive(seed, "tier", tier.name.value, utt.utt_id)
            alignment, utt_report = corrupt_with_report(utt.alignment, tier, rng, confusion, corpus.inventory.silence)
            report = report.merge(utt_report)
            degraded.append(utt.with_alignment(alignment))
        splits[name] = degraded
    logger.info(
        "Applied %s tier: %.1f%% of %d phone segments substituted, %d of %d boundaries moved",
        tier.name.value,
        100.0 * report.substitution_rate,
        report.eligible,
        report.moved,
        report.boundaries,
    )
    return Corpus(splits, corpus.inventory, corpus.lexicon, corpus.prototypes, corpus.config), report


def prepare_corpus(corpus: Corpus, config: RunConfig, tier: QualityTier) -> Tuple[Corpus, CorruptionReport]:
    check_corpus(corpus)
    corpus = select_train(corpus, config)
    if config.cmvn:
        corpus = normalize_speakers(corpus)
    return degrade_alignments(corpus, tier, config.seed)


def build_examples(
    variant: ModelVariant,
    utterances: Sequence[Utterance],
    resources: ModelResources,
    collapse_phones: bool = True,
) -> List[Example]:
    return [
        Example(
            utt_id=utt.utt_id,
            source=build_source(variant, utt, resources, collapse_phones),
            target=build_target(variant, utt, resources),
            references=reference_texts(utt, variant.target_kind),
            frames=utt.num_frames,
        )
        for utt in utterances
    ]


def split_examples(
    variant: ModelVariant,
    corpus: Corpus,
    resources: ModelResources,
    collapse_phones: bool = True,
) -> Dict[str, List[Example]]:
    return {
        name: build_examples(variant, corpus.splits[name], resources, collapse_phones)
        for name in SPLITS
        if name in corpus.splits
    }
