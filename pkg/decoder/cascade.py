"""Corpus translation and two-stage cascades."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import List, Optional, Protocol, Sequence, Tuple

from numcore.errors import ConsistencyError, ContractError
from stmodel.batch import SourceItem, collate_sources
from stmodel.inputs import ModelResources, build_source, phone_tokens, tokens_source
from stmodel.model import Seq2Seq
from synthcorpus.models import Utterance
from textpipe.bpe import bpe_decode
from textpipe.vocab import Vocabulary

from .beam import DEFAULT_ALPHA, DEFAULT_BEAM, beam_search
from .models import DecodeResult, Hypothesis

logger = logging.getLogger(__name__)

DEFAULT_BEAMS = (DEFAULT_BEAM, DEFAULT_BEAM)


@dataclass
class Translation:
    utt_id: str
    text: str
    hypothesis: Optional[Hypothesis] = None
    nbest: List[Hypothesis] = field(default_factory=list)
    intermediate: List[str] = field(default_factory=list)
    degenerate: bool = False

    @property
    def hit_max_len(self) -> bool:
        return self.hypothesis is not None and self.hypothesis.hit_max_len


class Translator:
    """A trained model plus the vocabularies needed to read and write text."""

    def __init__(self, model: Seq2Seq, resources: ModelResources, collapse_phones: bool = True) -> None:
        self.model = model
        self.resources = resources
        self.collapse_phones = collapse_phones

    def snapshot(self) -> "Translator":
        return Translator(self.model.snapshot(), self.resources, self.collapse_phones)

    def source_for(self, utterance: Utterance) -> SourceItem:
        return build_source(self.model.variant, utterance, self.resources, self.collapse_phones)

    def decode_item(self, item: SourceItem, beam: int = DEFAULT_BEAM, alpha: float = DEFAULT_ALPHA, nbest: int = 1) -> DecodeResult:
        return beam_search(self.model, collate_sources([item]), beam=beam, alpha=alpha, nbest=nbest)

    def pieces(self, hypothesis: Hypothesis) -> List[str]:
        return self.resources.target_vocab.decode(hypothesis.tokens)

    def detokenize(self, hypothesis: Hypothesis) -> str:
        return bpe_decode(self.pieces(hypothesis), self.resources.target_bpe.marker)

    def translate(self, utterance: Utterance, beam: int = DEFAULT_BEAM, alpha: float = DEFAULT_ALPHA, nbest: int = 1) -> Translation:
        result = self.decode_item(self.source_for(utterance), beam, alpha, nbest)
        return Translation(utterance.utt_id, self.detokenize(result.best), result.best, result.nbest)


# ---- cascade stages ----


@dataclass
class StageOutput:
    tokens: List[str]
    hit_max_len: bool = False


class Stage(Protocol):
    """First cascade stage: utterance -> 1-best token sequence."""

    output_vocab: Vocabulary

    def recognize(self, utterance: Utterance, beam: int = DEFAULT_BEAM, alpha: float = DEFAULT_ALPHA) -> StageOutput: ...


class ModelStage:
    """Recognition by a trained ASR model (BPE transcript pieces)."""

    def __init__(self, translator: Translator) -> None:
        self.translator = translator
        self.output_vocab = translator.resources.target_vocab

    def recognize(self, utterance: Utterance, beam: int = DEFAULT_BEAM, alpha: float = DEFAULT_ALPHA) -> StageOutput:
        result = self.translator.decode_item(self.translator.source_for(utterance), beam, alpha)
        return StageOutput(self.translator.pieces(result.best), result.hit_max_len)


class AlignmentStage:
    """Recognition read off the utterance's phone alignment (the aligner's output)."""

    def __init__(self, phone_vocab: Vocabulary, collapse: bool = True) -> None:
        self.output_vocab = phone_vocab
        self.collapse = collapse

    def recognize(self, utterance: Utterance, beam: int = DEFAULT_BEAM, alpha: float = DEFAULT_ALPHA) -> StageOutput:
        return StageOutput(phone_tokens(utterance.alignment, self.collapse))


def check_stage_vocabularies(stage1: Stage, stage2: Translator) -> None:
    expected = stage2.resources.source_vocab
    if expected is None or stage1.output_vocab != expected:
        raise ConsistencyError(
            f"stage-1 output vocabulary does not match the {stage2.model.variant.tag.value} input vocabulary"
        )


def cascade_translate(
    stage1: Stage,
    stage2: Translator,
    utterance: Utterance,
    beams: Tuple[int, int] = DEFAULT_BEAMS,
    alpha: float = DEFAULT_ALPHA,
) -> Translation:
    """1-best stage-1 output fed as the token source of stage 2."""
    recognized = stage1.recognize(utterance, beams[0], alpha)
    if not recognized.tokens:
        logger.warning("Empty intermediate for %s; emitting an empty translation", utterance.utt_id)
        eos_only = Hypothesis((Vocabulary.eos_id,), 0.0, 0.0, finished=True)
        return Translation(utterance.utt_id, "", eos_only, [], [], degenerate=True)
    item = tokens_source(recognized.tokens, stage2.resources.source_vocab)
    result = stage2.decode_item(item, beams[1], alpha)
    return Translation(
        utterance.utt_id,
        stage2.detokenize(result.best),
        result.best,
        result.nbest,
        intermediate=list(recognized.tokens),
    )


# ---- corpus decoding ----

_worker_job = None


def _init_worker(job) -> None:
    global _worker_job
    _worker_job = job


def _run_worker(utterance: Utterance) -> Translation:
    return _worker_job(utterance)


@dataclass
class _TranslateJob:
    translator: Translator
    beam: int
    alpha: float
    nbest: int

    def __call__(self, utterance: Utterance) -> Translation:
        return self.translator.translate(utterance, self.beam, self.alpha, self.nbest)


@dataclass
class _CascadeJob:
    stage1: Stage
    stage2: Translator
    beams: Tuple[int, int]
    alpha: float

    def __call__(self, utterance: Utterance) -> Translation:
        return cascade_translate(self.stage1, self.stage2, utterance, self.beams, self.alpha)


def _map(job, utterances: Sequence[Utterance], workers: int) -> List[Translation]:
    if workers > 1 and len(utterances) > 1:
        with Pool(processes=workers, initializer=_init_worker, initargs=(job,)) as pool:
            return pool.map(_run_worker, utterances, chunksize=max(1, len(utterances) // (4 * workers)))
    return [job(utt) for utt in utterances]


def translate_corpus(
    translator: Translator,
    utterances: Sequence[Utterance],
    beam: int = DEFAULT_BEAM,
    alpha: float = DEFAULT_ALPHA,
    nbest: int = 1,
    workers: int = 1,
) -> List[Translation]:
    """Decode every utterance from a frozen snapshot; output order follows input order."""
    if not utterances:
        raise ContractError("no utterances to translate")
    job = _TranslateJob(translator.snapshot(), beam, alpha, nbest)
    translations = _map(job, utterances, workers)
    flagged = sum(1 for t in translations if t.hit_max_len)
    if flagged:
        logger.info("%d of %d hypotheses hit the length limit", flagged, len(translations))
    return translations


def cascade_corpus(
    stage1: Stage,
    stage2: Translator,
    utterances: Sequence[Utterance],
    beams: Tuple[int, int] = DEFAULT_BEAMS,
    alpha: float = DEFAULT_ALPHA,
    workers: int = 1,
) -> List[Translation]:
    check_stage_vocabularies(stage1, stage2)
    if isinstance(stage1, ModelStage):
        stage1 = ModelStage(stage1.translator.snapshot())
    job = _CascadeJob(stage1, stage2.snapshot(), beams, alpha)
    translations = _map(job, utterances, workers)
    degenerate = sum(1 for t in translations if t.degenerate)
    if degenerate:
        logger.warning("%d of %d cascade outputs are degenerate", degenerate, len(translations))
    return translations
