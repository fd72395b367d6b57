"""phonest command line: synth, align, bpe, train, translate, cascade, score, experiment, assert-trends."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config_loader import (
    get_config,
    get_logging_config,
    get_paths_config,
    get_runtime_defaults,
    load_model_file,
    parse_model,
    read_structured_file,
)
from decoder.cascade import AlignmentStage, ModelStage, cascade_corpus, translate_corpus
from evalmetrics.bleu import avg_single_ref_bleu, corpus_bleu
from evalmetrics.report import write_report
from evalmetrics.wer import wer_report
from numcore.errors import ParameterError, PhonestError
from phonesup.io import write_alignments
from phonesup.quality import TierName, get_tier
from synthcorpus.config import SynthConfig
from synthcorpus.generator import generate
from synthcorpus.store import CorpusStore
from textpipe.bpe import BpeModel, bpe_decode, bpe_learn
from textpipe.normalize import normalize
from textpipe.textfile import read_id_text, write_id_text
from trainer.config import RunConfig
from trainer.data import degrade_alignments, prepare_corpus
from trainer.loop import RUN_CONFIG_FILE, describe, load_translator, train

from .manifest import DEFAULT_TRENDS, ExperimentManifest
from .runner import run_experiment
from .tables import console, read_results, results_table, score_table, trend_table
from .trends import assert_trends

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    settings = get_logging_config()
    logging.basicConfig(level=(level or settings["level"]).upper(), format=LOG_FORMAT)
    for name, logger_level in settings["loggers"].items():
        logging.getLogger(name).setLevel(str(logger_level).upper())


def _overrides(args: argparse.Namespace, names: Sequence[str]) -> Dict[str, Any]:
    """Flags that were actually given; None means 'not on the command line'."""
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def _load(model_cls, path: Optional[str], overrides: Dict[str, Any]):
    if path:
        return load_model_file(model_cls, Path(path), overrides)
    return parse_model(model_cls, overrides, "command line")


# ---- synth ----


def cmd_synth(args: argparse.Namespace) -> int:
    names = ("seed", "train_size", "dev_size", "test_size", "n_phones", "lexicon_size", "speaker_shift")
    config = _load(SynthConfig, args.config, _overrides(args, names))
    out = Path(args.out or get_paths_config()["corpus_dir"])
    corpus = generate(config, workers=args.workers or get_runtime_defaults()["workers"])
    CorpusStore(out).write(corpus)
    console.print(f"Wrote {sum(len(v) for v in corpus.splits.values())} utterances to {out}")
    return 0


# ---- align ----


def cmd_align(args: argparse.Namespace) -> int:
    corpus = CorpusStore(Path(args.corpus)).read()
    tier = get_tier(args.tier)
    degraded, report = degrade_alignments(corpus, tier, args.seed)
    out = Path(args.out)
    for split in args.splits:
        count = write_alignments(out / f"{split}.ali.tsv", (u.alignment for u in degraded.split(split)))
        console.print(f"{split}: {count} alignments -> {out / f'{split}.ali.tsv'}")
    console.print(
        f"{tier.name.value}: {100.0 * report.substitution_rate:.1f}% of {report.eligible} segments substituted, "
        f"{report.moved} of {report.boundaries} boundaries moved"
    )
    return 0


# ---- bpe ----


def _read_lines(path: str) -> List[str]:
    return [normalize(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def cmd_bpe(args: argparse.Namespace) -> int:
    merges_path, vocab_path = Path(f"{args.model}.bpe"), Path(f"{args.model}.vocab")
    if args.mode == "learn":
        model = bpe_learn(_read_lines(args.input), args.merges)
        model.save(merges_path, vocab_path)
        console.print(f"Learned {len(model.merges)} merges, vocabulary {len(model.vocab)} -> {args.model}.*")
        return 0
    model = BpeModel.load(merges_path, vocab_path)
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    if args.mode == "apply":
        output = [" ".join(model.encode_line(normalize(line))) for line in lines]
    else:
        output = [bpe_decode(line.split(), model.marker) for line in lines]
    text = "\n".join(output) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# ---- train ----

RUN_FLAGS = (
    "variant",
    "corpus_dir",
    "output_dir",
    "tier",
    "seed",
    "train_fraction",
    "train_size",
    "frame_budget",
    "max_epochs",
    "lr",
    "bpe_merges",
    "collapse_phones",
    "beam",
    "max_dev_utterances",
)


def cmd_train(args: argparse.Namespace) -> int:
    overrides = _overrides(args, RUN_FLAGS)
    if "corpus_dir" not in overrides and not args.config:
        overrides["corpus_dir"] = get_paths_config()["corpus_dir"]
    config = _load(RunConfig, args.config, overrides)
    if config.output_dir is None:
        config = config.model_copy(update={"output_dir": str(Path(get_paths_config()["models_dir"]) / config.variant.value)})
    result = train(config)
    console.print(describe(result))
    return 0


# ---- translate / cascade ----


def _eval_utterances(model_dir: Path, corpus_dir: str, split: str, tier: Optional[str]):
    run = load_model_file(RunConfig, model_dir / RUN_CONFIG_FILE)
    quality = get_tier(tier or run.tier)
    prepared, _ = prepare_corpus(CorpusStore(Path(corpus_dir)).read(), run, quality)
    return run, prepared.split(split)


def cmd_translate(args: argparse.Namespace) -> int:
    model_dir = Path(args.model)
    translator = load_translator(model_dir)
    run, utts = _eval_utterances(model_dir, args.corpus, args.split, args.tier)
    beam = args.beam or run.beam
    alpha = run.alpha if args.alpha is None else args.alpha
    workers = args.workers or get_runtime_defaults()["decode_workers"]
    translations = translate_corpus(translator, utts, beam, alpha, nbest=args.nbest, workers=workers)
    write_id_text(Path(args.output), ((t.utt_id, t.text) for t in translations))
    if args.nbest_output:
        path = Path(args.nbest_output)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for t in translations:
                entries = [
                    dict(h.to_dict(), text=bpe_decode(translator.pieces(h), translator.resources.target_bpe.marker))
                    for h in t.nbest
                ]
                handle.write(json.dumps({"utt_id": t.utt_id, "nbest": entries}) + "\n")
    console.print(f"Translated {len(translations)} utterances -> {args.output}")
    return 0


def cmd_cascade(args: argparse.Namespace) -> int:
    stage2_dir = Path(args.stage2)
    stage2 = load_translator(stage2_dir)
    if args.stage1 == "alignment":
        stage1 = AlignmentStage(stage2.resources.source_vocab, collapse=stage2.collapse_phones)
        feature_dir = stage2_dir
    else:
        stage1 = ModelStage(load_translator(Path(args.stage1)))
        feature_dir = Path(args.stage1)
    run, utts = _eval_utterances(feature_dir, args.corpus, args.split, args.tier)
    alpha = run.alpha if args.alpha is None else args.alpha
    beams = (args.beam1 or run.beam, args.beam2 or run.beam)
    workers = args.workers or get_runtime_defaults()["decode_workers"]
    translations = cascade_corpus(stage1, stage2, utts, beams, alpha, workers=workers)
    write_id_text(Path(args.output), ((t.utt_id, t.text) for t in translations))
    if args.intermediate_output:
        write_id_text(Path(args.intermediate_output), ((t.utt_id, " ".join(t.intermediate)) for t in translations))
    console.print(f"Cascaded {len(translations)} utterances -> {args.output}")
    return 0


# ---- score ----


def _aligned(hyps: Dict[str, str], refs: Dict[str, str], path: str) -> List[str]:
    missing = sorted(set(hyps) - set(refs))
    if missing:
        raise ParameterError(f"{path} has no reference for {len(missing)} hypotheses, e.g. {missing[0]}")
    return [refs[utt_id] for utt_id in hyps]


def cmd_score(args: argparse.Namespace) -> int:
    hyps = read_id_text(Path(args.hyp))
    ref_paths = [args.ref] if isinstance(args.ref, str) else list(args.ref)
    streams = [_aligned(hyps, read_id_text(Path(path)), path) for path in ref_paths]
    hyp_texts = list(hyps.values())
    if args.normalize:
        hyp_texts = [normalize(h) for h in hyp_texts]
        streams = [[normalize(r) for r in stream] for stream in streams]
    if args.metric == "wer":
        report = wer_report(hyp_texts, streams[0])
    elif args.metric == "avgbleu":
        report = avg_single_ref_bleu(hyp_texts, streams, smoothing=args.smooth)
    else:
        refs = [[stream[i] for stream in streams if stream[i]] for i in range(len(hyp_texts))]
        report = corpus_bleu(hyp_texts, refs, smoothing=args.smooth)
    if args.json:
        write_report(report, Path(args.json), Path(args.tsv) if args.tsv else None)
    console.print(score_table([report]))
    return 0


# ---- experiment / trends ----


def load_manifest(path: str, output_dir: Optional[str] = None) -> ExperimentManifest:
    data = read_structured_file(Path(path))
    if output_dir:
        data["output_dir"] = output_dir
    return parse_model(ExperimentManifest, data, path)


def cmd_experiment(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest, args.output_dir)
    result = run_experiment(manifest, workers=args.workers, check_trends=not args.no_trends)
    console.print(results_table(result.records, title=manifest.name))
    if result.trends is not None:
        console.print(trend_table(result.trends))
    if result.failures:
        console.print(f"[red]{len(result.failures)} failure(s)[/]; see cell logs under {manifest.output_dir}/cells")
    return result.exit_code


def cmd_assert_trends(args: argparse.Namespace) -> int:
    rows = read_results(Path(args.results))
    trends = load_manifest(args.manifest).trend_specs if args.manifest else DEFAULT_TRENDS
    report = assert_trends(rows, trends)
    if args.out:
        report.write(Path(args.out))
    console.print(trend_table(report))
    return report.exit_code


# ---- parser ----

# Commands whose --config is a pydantic model file (SynthConfig / RunConfig / manifest).
MODEL_CONFIG_COMMANDS = {"synth", "train", "experiment"}

REQUIRED = {
    "align": ("corpus", "out"),
    "bpe": ("model", "input"),
    "translate": ("model", "corpus", "output"),
    "cascade": ("stage1", "stage2", "corpus", "output"),
    "score": ("hyp", "ref"),
    "experiment": ("manifest",),
    "assert-trends": ("results",),
}

DEFAULTS = {
    "align": {"tier": TierName.GOLD.value, "seed": 0, "splits": ["train", "dev", "test"]},
    "bpe": {"merges": 1000},
    "translate": {"split": "test", "nbest": 1},
    "cascade": {"split": "test"},
    "score": {"metric": "bleu", "smooth": False, "normalize": False},
}


def merge_config_file(args: argparse.Namespace) -> None:
    """Fill options not given as flags from the --config mapping, then apply defaults."""
    if args.command not in MODEL_CONFIG_COMMANDS and getattr(args, "config", None):
        for key, value in read_structured_file(Path(args.config)).items():
            dest = key.replace("-", "_")
            if dest in ("command", "func", "config") or not hasattr(args, dest):
                raise ParameterError(f"{args.config}: unknown option {key!r} for {args.command}")
            if getattr(args, dest) is None:
                setattr(args, dest, value)
    for dest, value in DEFAULTS.get(args.command, {}).items():
        if getattr(args, dest) is None:
            setattr(args, dest, value)
    missing = [f"--{d.replace('_', '-')}" for d in REQUIRED.get(args.command, ()) if getattr(args, d) is None]
    if missing:
        raise ParameterError(f"{args.command}: missing required option(s) {', '.join(missing)}")


def _bool_flag(parser: argparse.ArgumentParser, name: str, help_text: str) -> None:
    dest = name.replace("-", "_")
    parser.add_argument(f"--{name}", dest=dest, action="store_true", default=None, help=help_text)
    parser.add_argument(f"--no-{name}", dest=dest, action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phonest", description="Phone-featured speech translation toolkit")
    parser.add_argument("--runtime-config", default="config.yaml", help="Runtime settings (logging, paths, workers)")
    parser.add_argument("--log-level", default=None, help="Override logging.level")
    sub = parser.add_subparsers(dest="command", required=True)
    tiers = [t.value for t in TierName]

    p = sub.add_parser("synth", help="Generate a synthetic parallel speech corpus")
    p.add_argument("--config", help="SynthConfig JSON/YAML")
    p.add_argument("--out", help="Corpus directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-size", type=int)
    p.add_argument("--dev-size", type=int)
    p.add_argument("--test-size", type=int)
    p.add_argument("--n-phones", type=int)
    p.add_argument("--lexicon-size", type=int)
    p.add_argument("--speaker-shift", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("align", help="Export tier-quality phone alignments")
    p.add_argument("--config", help="JSON/YAML with any of these options")
    p.add_argument("--corpus")
    p.add_argument("--tier", choices=tiers)
    p.add_argument("--seed", type=int)
    p.add_argument("--splits", nargs="+")
    p.add_argument("--out", help="Directory for <split>.ali.tsv")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("bpe", help="Learn, apply or undo BPE")
    p.add_argument("mode", choices=["learn", "apply", "decode"])
    p.add_argument("--config", help="JSON/YAML with any of these options")
    p.add_argument("--model", help="Path prefix for <prefix>.bpe and <prefix>.vocab")
    p.add_argument("--input", help="Plain text, one sentence per line")
    p.add_argument("--merges", type=int)
    p.add_argument("--output", help="Output file for apply/decode (default stdout)")
    p.set_defaults(func=cmd_bpe)

    p = sub.add_parser("train", help="Train one model variant")
    p.add_argument("--config", help="RunConfig JSON/YAML")
    p.add_argument("--variant")
    p.add_argument("--corpus-dir")
    p.add_argument("--output-dir")
    p.add_argument("--tier", choices=tiers)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--train-size", type=int)
    p.add_argument("--frame-budget", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--bpe-merges", type=int)
    p.add_argument("--beam", type=int)
    p.add_argument("--max-dev-utterances", type=int)
    _bool_flag(p, "collapse-phones", "Collapse phone runs for mt_over_phones (default on)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="Decode a split with a trained model")
    p.add_argument("--config", help="JSON/YAML with any of these options")
    p.add_argument("--model", help="Model directory written by train")
    p.add_argument("--corpus")
    p.add_argument("--split")
    p.add_argument("--tier", choices=tiers)
    p.add_argument("--beam", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--nbest", type=int)
    p.add_argument("--nbest-output", help="JSON-lines n-best lists")
    p.add_argument("--output")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("cascade", help="Two-stage decoding")
    p.add_argument("--config", help="JSON/YAML with any of these options")
    p.add_argument("--stage1", help="ASR model directory, or 'alignment'")
    p.add_argument("--stage2", help="MT model directory")
    p.add_argument("--corpus")
    p.add_argument("--split")
    p.add_argument("--tier", choices=tiers)
    p.add_argument("--beam1", type=int)
    p.add_argument("--beam2", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--output")
    p.add_argument("--intermediate-output")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("score", help="BLEU, average single-reference BLEU or WER")
    p.add_argument("--config", help="JSON/YAML with any of these options")
    p.add_argument("--hyp")
    p.add_argument("--ref", nargs="+")
    p.add_argument("--metric", choices=["bleu", "avgbleu", "wer"])
    p.add_argument("--smooth", action="store_true", default=None, help="Add-one smoothing for n >= 2")
    p.add_argument("--normalize", action="store_true", default=None)
    p.add_argument("--json")
    p.add_argument("--tsv")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("experiment", help="Run an experiment manifest")
    p.add_argument("--manifest", "--config", dest="manifest", help="ExperimentManifest JSON/YAML")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-trends", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("assert-trends", help="Check ordering claims against results.json")
    p.add_argument("--config", help="JSON/YAML with any of these options")
    p.add_argument("--results")
    p.add_argument("--manifest", help="Manifest whose trends to check (default: built-in trends)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_assert_trends)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    get_config(args.runtime_config)
    configure_logging(args.log_level)
    try:
        merge_config_file(args)
        return args.func(args)
    except PhonestError as exc:
        logger.error("%s", exc)
        return 1
