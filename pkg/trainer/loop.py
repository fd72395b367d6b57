"""Training loop: batched teacher forcing, validation BLEU, plateau decay."""

from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config_loader import load_model_file, write_model_file
from decoder.cascade import Translator
from evalmetrics.bleu import corpus_bleu
from numcore.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from numcore.errors import ContractError, ParameterError
from numcore.functional import Mode
from numcore.optim import AdamState, adam_step
from numcore.rng import derive
from numcore.tensor import backward
from phonesup.quality import get_tier
from stmodel.batch import collate_sources
from stmodel.inputs import ModelResources
from stmodel.model import Seq2Seq
from stmodel.variants import InputKind, get_variant
from synthcorpus.models import Corpus
from synthcorpus.store import CorpusStore

from .batching import make_batches
from .config import RunConfig
from .data import Example, prepare_corpus, split_examples
from .log import EpochRecord, TrainLog, TrainLogStore
from .schedule import PlateauSchedule

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.json"
RUN_CONFIG_FILE = "run_config.json"
LOG_JSONL = "train_log.jsonl"
LOG_TSV = "train_log.tsv"


@dataclass
class TrainResult:
    log: TrainLog
    model: Seq2Seq
    resources: ModelResources
    checkpoint: Checkpoint
    corpus: Corpus
    excluded: int = 0

    @property
    def translator(self) -> Translator:
        return Translator(self.model, self.resources, bool(self.checkpoint.metadata.get("collapse_phones", True)))


def build_model(config: RunConfig, resources: ModelResources, feature_dim: int) -> Seq2Seq:
    variant = get_variant(config.variant.value)
    source_vocab = resources.source_vocab
    return Seq2Seq.build(
        variant,
        config.arch,
        input_dim=feature_dim,
        target_vocab_size=len(resources.target_vocab),
        rng=derive(config.seed, "init", variant.tag.value),
        source_vocab_size=len(source_vocab) if variant.is_discrete and source_vocab is not None else 0,
        phone_vocab_size=len(resources.inventory) if variant.input_kind is InputKind.FRAMES_PHONE_FACTOR else 0,
    )


def train_step(
    model: Seq2Seq,
    optimizer: AdamState,
    examples: Sequence[Example],
    rng: np.random.Generator,
) -> Tuple[float, int]:
    """One Adam update on a batch; returns (mean token loss, target token count)."""
    batch = collate_sources([e.source for e in examples])
    targets = [e.target for e in examples]
    model.params.zero_grad()
    loss = model.forward_loss(batch, targets, Mode.TRAIN, rng)
    backward(loss)
    adam_step(model.params.as_dict(), model.params.grads(), optimizer)
    if model.arch.fix_target_norm:
        model.renormalize_embeddings()
    return loss.item(), sum(len(t) for t in targets)


def validation_bleu(translator: Translator, examples: Sequence[Example], beam: int, alpha: float) -> float:
    hypotheses: List[str] = []
    for example in examples:
        result = translator.decode_item(example.source, beam, alpha)
        hypotheses.append(translator.detokenize(result.best))
    return corpus_bleu(hypotheses, [e.references for e in examples]).value


def load_corpus(config: RunConfig) -> Corpus:
    if config.corpus_dir is None:
        raise ParameterError("no corpus given: set corpus_dir or pass a corpus")
    return CorpusStore(Path(config.corpus_dir)).read()


def train(
    config: RunConfig,
    corpus: Optional[Corpus] = None,
    resources: Optional[ModelResources] = None,
) -> TrainResult:
    """Train one model variant; deterministic for a given config and corpus."""
    variant = get_variant(config.variant.value)
    tier = get_tier(config.tier)
    prepared, _ = prepare_corpus(corpus if corpus is not None else load_corpus(config), config, tier)
    train_utts = prepared.split("train")
    if resources is None:
        resources = ModelResources.build(variant, train_utts, prepared.inventory, config.bpe_merges)
    examples = split_examples(variant, prepared, resources, config.collapse_phones)
    train_examples = examples["train"]
    dev_examples = examples.get("dev", [])
    if config.max_dev_utterances is not None:
        dev_examples = dev_examples[: config.max_dev_utterances]
    validate = config.validate_each_epoch and bool(dev_examples)

    model = build_model(config, resources, train_utts[0].features.dim)
    translator = Translator(model, resources, config.collapse_phones)
    optimizer = AdamState(lr=config.lr)
    schedule = PlateauSchedule(config.lr, config.decay, config.first_patience, config.patience)
    extra = {"collapse_phones": config.collapse_phones, "tier": tier.name.value, "seed": config.seed}

    out_dir = Path(config.output_dir) if config.output_dir else None
    store = TrainLogStore(out_dir / LOG_JSONL) if out_dir else None
    if store is not None:
        store.reset()
        resources.save(out_dir)
        write_model_file(config, out_dir / RUN_CONFIG_FILE)

    log = TrainLog()
    best: Optional[Checkpoint] = None
    steps = 0
    excluded = 0
    logger.info(
        "Training %s on %d utterances (%d dev), tier=%s seed=%d",
        variant.tag.value,
        len(train_examples),
        len(dev_examples),
        tier.name.value,
        config.seed,
    )
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        rng = derive(config.seed, "epoch", epoch)
        plan = make_batches(
            [e.length for e in train_examples],
            config.frame_budget,
            rng,
            config.max_source_frames,
            [e.frames for e in train_examples],
        )
        if not plan.batches:
            raise ContractError("every training utterance was excluded")
        excluded = len(plan.excluded)
        loss_sum = 0.0
        token_sum = 0
        for indices in plan.batches:
            loss, tokens = train_step(model, optimizer, [train_examples[i] for i in indices], rng)
            loss_sum += loss * tokens
            token_sum += tokens
            steps += 1

        bleu = validation_bleu(translator, dev_examples, config.beam, config.alpha) if validate else None
        record = EpochRecord(
            epoch=epoch,
            train_loss=loss_sum / token_sum,
            dev_bleu=bleu,
            lr=optimizer.lr,
            steps=steps,
            wall_time=time.perf_counter() - started,
            excluded=excluded,
        )
        if log.add(record):
            best = model.checkpoint(copy.deepcopy(optimizer), dict(extra, epoch=epoch))
            if out_dir is not None:
                save_checkpoint(best, out_dir / CHECKPOINT_FILE)
        if store is not None:
            store.append(record)
        logger.info(
            "epoch %d: loss=%.4f bleu=%s lr=%.2e batches=%d",
            epoch,
            record.train_loss,
            "-" if bleu is None else f"{bleu:.2f}",
            optimizer.lr,
            len(plan.batches),
        )

        if bleu is not None and schedule.observe(bleu):
            optimizer.lr = schedule.lr
            logger.info("Validation BLEU plateaued; learning rate now %.2e", optimizer.lr)
        if optimizer.lr < config.min_lr:
            logger.info("Learning rate below %.1e; stopping after epoch %d", config.min_lr, epoch)
            break

    if out_dir is not None:
        log.write_tsv(out_dir / LOG_TSV)
    best.restore(model.params)
    return TrainResult(log=log, model=model, resources=resources, checkpoint=best, corpus=prepared, excluded=excluded)


def load_translator(model_dir: Path) -> Translator:
    """Rebuild a trained model and its vocabularies from a model directory."""
    model_dir = Path(model_dir)
    checkpoint = load_checkpoint(model_dir / CHECKPOINT_FILE)
    model = Seq2Seq.from_checkpoint(checkpoint)
    resources = ModelResources.load(model_dir)
    return Translator(model, resources, bool(checkpoint.metadata.get("collapse_phones", True)))


def load_run_config(path: Path, overrides: Optional[dict] = None) -> RunConfig:
    return load_model_file(RunConfig, path, overrides)


def read_train_log(model_dir: Path) -> TrainLog:
    log = TrainLog()
    for record in TrainLogStore(Path(model_dir) / LOG_JSONL).read_all():
        log.add(record)
    return log


def describe(result: TrainResult) -> str:
    best = result.log.best_record
    return json.dumps(
        {
            "variant": result.model.variant.tag.value,
            "epochs": len(result.log.records),
            "best_epoch": result.log.best_epoch,
            "best_dev_bleu": None if best is None else best.dev_bleu,
            "steps": result.log.steps,
            "excluded": result.excluded,
        },
        sort_keys=True,
    )
