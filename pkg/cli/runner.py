"""Experiment grid runner: shared stage models, per-cell scoring, resumable."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from config_loader import write_model_file
from decoder.cascade import AlignmentStage, ModelStage, Translation, cascade_corpus, translate_corpus
from evalmetrics.bleu import corpus_bleu
from evalmetrics.wer import error_rate, wer
from phonesup.quality import TierName, get_tier
from stmodel.inputs import reference_texts
from stmodel.variants import TargetKind
from synthcorpus.generator import generate
from synthcorpus.models import Corpus, Utterance
from synthcorpus.store import METADATA_FILE, CorpusStore
from textpipe.bpe import bpe_decode
from textpipe.normalize import normalize
from trainer.data import prepare_corpus
from trainer.loop import CHECKPOINT_FILE, LOG_TSV, load_translator, read_train_log, train

from .manifest import NO_TIER, Cell, ExperimentManifest, MetricsRow, ModelJob
from .tables import write_results
from .trends import TrendReport, assert_trends

logger = logging.getLogger(__name__)

EVAL_SPLITS = ("dev", "test")
METRICS_FILE = "metrics.json"
CELL_LOG_FILE = "log.jsonl"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class CellLogStore:
    """Append-only JSON-lines event log for one cell or model."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: str, **fields: Any) -> None:
        record = {"time": _now_iso(), "event": event, **fields}
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")

    def read_all(self) -> List[dict]:
        if not self.path.exists():
            return []
        return [json.loads(line) for line in self.path.read_text(encoding="utf-8").splitlines() if line.strip()]


@dataclass
class Failure:
    key: str
    error: str


@dataclass
class ExperimentResult:
    rows: List[MetricsRow]
    records: List[dict]
    trained: List[str] = field(default_factory=list)
    evaluated: List[str] = field(default_factory=list)
    failures: List[Failure] = field(default_factory=list)
    trends: Optional[TrendReport] = None

    @property
    def exit_code(self) -> int:
        if self.failures:
            return 1
        if self.trends is not None and not self.trends.passed:
            return 2
        return 0


# ---- layout ----


class ExperimentLayout:
    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    @property
    def corpus_dir(self) -> Path:
        return self.root / "corpus"

    def model_dir(self, job: ModelJob) -> Path:
        return self.root / "models" / job.key

    def cell_dir(self, cell: Cell) -> Path:
        return self.root / "cells" / cell.key

    def model_done(self, job: ModelJob) -> bool:
        directory = self.model_dir(job)
        return (directory / CHECKPOINT_FILE).exists() and (directory / LOG_TSV).exists()

    def cell_done(self, cell: Cell) -> bool:
        return (self.cell_dir(cell) / METRICS_FILE).exists()


# ---- corpus ----

_corpus_cache: Dict[str, Corpus] = {}


def load_corpus(corpus_dir: str) -> Corpus:
    """Per-process cache; a corpus directory is never modified while a run reads it."""
    if corpus_dir not in _corpus_cache:
        _corpus_cache[corpus_dir] = CorpusStore(Path(corpus_dir)).read()
    return _corpus_cache[corpus_dir]


def ensure_corpus(manifest: ExperimentManifest, layout: ExperimentLayout, workers: int = 1) -> str:
    if manifest.corpus.corpus_dir is not None:
        return manifest.corpus.corpus_dir
    target = layout.corpus_dir
    if (target / METADATA_FILE).exists():
        logger.info("Reusing synthetic corpus at %s", target)
    else:
        CorpusStore(target).write(generate(manifest.corpus.synth, workers=workers))
    return str(target)


# ---- jobs ----


def model_jobs(cells: Iterable[Cell]) -> List[ModelJob]:
    jobs: List[ModelJob] = []
    for cell in cells:
        for stage in cell.spec.trained_stages:
            job = ModelJob.for_stage(stage, cell)
            if job not in jobs:
                jobs.append(job)
    return jobs


def train_model(job: ModelJob, manifest: ExperimentManifest, corpus_dir: str, root: str) -> Optional[Failure]:
    layout = ExperimentLayout(Path(root))
    directory = layout.model_dir(job)
    log = CellLogStore(directory / CELL_LOG_FILE)
    started = time.perf_counter()
    log.append("train_started", model=job.key)
    try:
        config = manifest.run_config(job, corpus_dir, str(directory))
        result = train(config, corpus=load_corpus(corpus_dir))
    except Exception as exc:
        logger.exception("Training %s failed", job.key)
        log.append("failed", model=job.key, error=f"{type(exc).__name__}: {exc}")
        return Failure(job.key, f"{type(exc).__name__}: {exc}")
    log.append(
        "trained",
        model=job.key,
        wall_time=time.perf_counter() - started,
        epochs=len(result.log.records),
        best_epoch=result.log.best_epoch,
        steps=result.log.steps,
    )
    return None


def _stage1_error(cell: Cell, translations: Sequence[Translation], utts: Sequence[Utterance], gold: Dict[str, Utterance]) -> float:
    if cell.spec.stages[0].is_alignment:
        # Phone error rate of the tier alignment against the gold alignment, both collapsed.
        hyps = [utt.alignment.collapsed() for utt in utts]
        refs = [gold[utt.utt_id].alignment.collapsed() for utt in utts]
        return 100.0 * error_rate(hyps, refs)
    hyps = [bpe_decode(t.intermediate) for t in translations]
    return 100.0 * wer(hyps, [normalize(utt.source) for utt in utts])


def _decode(
    cell: Cell,
    manifest: ExperimentManifest,
    layout: ExperimentLayout,
    utts: Sequence[Utterance],
    beam: int,
    alpha: float,
) -> List[Translation]:
    spec = cell.spec
    final = load_translator(layout.model_dir(ModelJob.for_stage(spec.stages[-1], cell)))
    if not spec.is_cascade:
        return translate_corpus(final, utts, beam, alpha)
    first = spec.stages[0]
    if first.is_alignment:
        stage1 = AlignmentStage(final.resources.source_vocab, collapse=first.collapse_phones)
    else:
        stage1 = ModelStage(load_translator(layout.model_dir(ModelJob.for_stage(first, cell))))
    return cascade_corpus(stage1, final, utts, manifest.stage_beams, alpha)


def evaluate_cell(cell: Cell, manifest: ExperimentManifest, corpus_dir: str, root: str) -> Optional[Failure]:
    """Decode dev and test for one cell and write its metrics; failures are logged, not raised."""
    layout = ExperimentLayout(Path(root))
    log = CellLogStore(layout.cell_dir(cell) / CELL_LOG_FILE)
    started = time.perf_counter()
    log.append("evaluate_started", cell=cell.key)
    try:
        row = score_cell(cell, manifest, corpus_dir, layout)
    except Exception as exc:
        logger.exception("Cell %s failed", cell.key)
        log.append("failed", cell=cell.key, error=f"{type(exc).__name__}: {exc}")
        return Failure(cell.key, f"{type(exc).__name__}: {exc}")
    path = layout.cell_dir(cell) / METRICS_FILE
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(row.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)
    log.append("evaluated", cell=cell.key, wall_time=time.perf_counter() - started, test_bleu=row.test_bleu)
    return None


def score_cell(cell: Cell, manifest: ExperimentManifest, corpus_dir: str, layout: ExperimentLayout) -> MetricsRow:
    spec = cell.spec
    corpus = load_corpus(corpus_dir)
    first_job = ModelJob.for_stage(spec.trained_stages[0], cell)
    config = manifest.run_config(first_job, corpus_dir, str(layout.model_dir(first_job)))
    tier = get_tier(TierName.GOLD if cell.tier == NO_TIER else cell.tier)
    prepared, _ = prepare_corpus(corpus, config, tier)
    gold = {utt.utt_id: utt for utt in corpus}

    scores: Dict[str, float] = {}
    stage1: Dict[str, float] = {}
    degenerate = hit_max_len = 0
    for split in EVAL_SPLITS:
        utts = prepared.split(split)
        translations = _decode(cell, manifest, layout, utts, config.beam, config.alpha)
        refs = [reference_texts(utt, TargetKind.TRANSLATION_BPE) for utt in utts]
        scores[split] = corpus_bleu([t.text for t in translations], refs).value
        if spec.is_cascade:
            stage1[split] = _stage1_error(cell, translations, utts, gold)
        degenerate += sum(1 for t in translations if t.degenerate)
        hit_max_len += sum(1 for t in translations if t.hit_max_len)

    steps = 0
    for stage in spec.trained_stages:
        steps += read_train_log(layout.model_dir(ModelJob.for_stage(stage, cell))).steps
    final_log = read_train_log(layout.model_dir(ModelJob.for_stage(spec.stages[-1], cell)))
    metric = None
    if spec.is_cascade:
        metric = "PER" if spec.stages[0].is_alignment else "WER"
    return MetricsRow(
        system=cell.system.value,
        size=cell.size,
        tier=cell.tier,
        seed=cell.seed,
        dev_bleu=scores["dev"],
        test_bleu=scores["test"],
        stage1_metric=metric,
        stage1_dev=stage1.get("dev"),
        stage1_test=stage1.get("test"),
        train_steps=steps,
        epochs_to_best=final_log.best_epoch or 0,
        degenerate=degenerate,
        hit_max_len=hit_max_len,
    )


# ---- pool plumbing ----


def _call(args: Tuple[Callable, tuple]) -> Optional[Failure]:
    fn, fn_args = args
    return fn(*fn_args)


def _run_all(fn: Callable, items: Sequence, extra: tuple, workers: int) -> List[Failure]:
    calls = [(fn, (item, *extra)) for item in items]
    if workers > 1 and len(calls) > 1:
        with Pool(processes=min(workers, len(calls))) as pool:
            outcomes = pool.map(_call, calls, chunksize=1)
    else:
        outcomes = [_call(c) for c in calls]
    return [o for o in outcomes if o is not None]


def collect_rows(manifest: ExperimentManifest, layout: ExperimentLayout) -> List[MetricsRow]:
    rows = []
    for cell in manifest.cells():
        path = layout.cell_dir(cell) / METRICS_FILE
        if path.exists():
            rows.append(MetricsRow.from_dict(json.loads(path.read_text(encoding="utf-8"))))
    return rows


def run_experiment(
    manifest: ExperimentManifest,
    workers: Optional[int] = None,
    check_trends: bool = True,
) -> ExperimentResult:
    """Run every missing cell of the grid, then write results.tsv/json (and trends.json)."""
    workers = workers or manifest.workers
    layout = ExperimentLayout(Path(manifest.output_dir))
    layout.root.mkdir(parents=True, exist_ok=True)
    write_model_file(manifest, layout.root / "manifest.json")
    corpus_dir = ensure_corpus(manifest, layout, workers)

    cells = manifest.cells()
    pending = [cell for cell in cells if not layout.cell_done(cell)]
    to_train = [job for job in model_jobs(pending) if not layout.model_done(job)]
    logger.info(
        "%s: %d cells (%d pending), %d models to train, %d workers",
        manifest.name,
        len(cells),
        len(pending),
        len(to_train),
        workers,
    )
    root = str(layout.root)
    failures = _run_all(train_model, to_train, (manifest, corpus_dir, root), workers)
    failed_models = {f.key for f in failures}
    runnable = []
    for cell in pending:
        missing = [j.key for j in model_jobs([cell]) if j.key in failed_models]
        if missing:
            CellLogStore(layout.cell_dir(cell) / CELL_LOG_FILE).append("skipped", cell=cell.key, failed_models=missing)
            failures.append(Failure(cell.key, f"stage model(s) failed: {missing}"))
        else:
            runnable.append(cell)
    failures.extend(_run_all(evaluate_cell, runnable, (manifest, corpus_dir, root), workers))

    rows = collect_rows(manifest, layout)
    records = write_results(rows, manifest.baseline_system.value, layout.root)
    result = ExperimentResult(
        rows=rows,
        records=records,
        trained=[j.key for j in to_train if j.key not in failed_models],
        evaluated=[c.key for c in runnable if layout.cell_done(c)],
        failures=failures,
    )
    if check_trends and manifest.trend_specs:
        result.trends = assert_trends(rows, manifest.trend_specs)
        result.trends.write(layout.root / "trends.json")
    for failure in failures:
        logger.error("Failed: %s: %s", failure.key, failure.error)
    return result
