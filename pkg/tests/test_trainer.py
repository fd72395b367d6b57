from __future__ import annotations

from typing import Tuple

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import TINY_SYNTH
from decoder import beam_search
from numcore.errors import ConsistencyError, ContractError, ParameterError
from numcore.optim import AdamState
from phonesup.alignment import PhoneAlignment
from phonesup.quality import TierName, get_tier
from stmodel import ModelResources, VariantTag, collate_sources, get_variant
from stmodel.config import ArchConfig
from synthcorpus.config import SynthConfig
from synthcorpus.generator import generate
from synthcorpus.models import Corpus
from trainer import (
    EpochRecord,
    PlateauSchedule,
    RunConfig,
    TrainLog,
    TrainLogStore,
    build_examples,
    build_model,
    check_corpus,
    degrade_alignments,
    load_translator,
    make_batches,
    prepare_corpus,
    schedule_update,
    train,
    train_step,
)
from trainer.loop import load_run_config, read_train_log


class TestPlateauSchedule:
    def test_first_decay_waits_for_first_patience(self):
        schedule = PlateauSchedule(lr=1.0, first_patience=3, patience=2)
        decayed = [schedule.observe(b) for b in [10.0, 9.0, 9.0, 9.0]]
        assert decayed == [False, False, False, True]
        assert schedule.lr == pytest.approx(0.5)
        assert schedule.best_epoch == 1

    def test_later_decays_use_shorter_patience(self):
        schedule = PlateauSchedule(lr=1.0, first_patience=3, patience=2)
        decayed = [schedule.observe(b) for b in [10.0, 9.0, 9.0, 9.0, 9.0, 9.0]]
        assert decayed == [False, False, False, True, False, True]
        assert schedule.lr == pytest.approx(0.25)
        assert schedule.decays == 2

    def test_improvement_resets_the_counter(self):
        schedule = PlateauSchedule(lr=1.0, first_patience=2, patience=2)
        decayed = [schedule.observe(b) for b in [1.0, 0.5, 2.0, 1.0, 3.0, 2.0]]
        assert not any(decayed)
        assert schedule.best == 3.0

    def test_equal_score_is_not_an_improvement(self):
        schedule = PlateauSchedule(lr=1.0, first_patience=2, patience=2)
        assert [schedule.observe(b) for b in [5.0, 5.0, 5.0]] == [False, False, True]

    def test_zero_bleu_counts_as_stale(self):
        schedule = PlateauSchedule(lr=1.0)
        decayed = [schedule.observe(0.0) for _ in range(10)]
        assert decayed == [False] * 9 + [True]

    @pytest.mark.parametrize(
        "history, expected",
        [
            ([0.0] * 9, 1.0),
            ([0.0] * 10, 0.5),
            ([1.0] + [0.5] * 10, 0.5),
            ([1.0] + [0.5] * 11, 1.0),
            ([1.0] + [0.5] * 15, 0.5),
        ],
    )
    def test_schedule_update(self, history, expected):
        assert schedule_update(history, lr=1.0) == pytest.approx(expected)

    def test_schedule_update_needs_history(self):
        with pytest.raises(ContractError):
            schedule_update([], lr=1.0)

    def test_bad_decay(self):
        with pytest.raises(ParameterError):
            PlateauSchedule(lr=1.0, decay=1.5)


class TestBatching:
    def test_every_included_index_once(self, rng):
        lengths = rng.integers(5, 200, size=60)
        plan = make_batches(lengths, 500, rng)
        flat = sorted(i for batch in plan.batches for i in batch)
        assert flat == list(range(60))
        assert plan.included == 60

    def test_budget_respected(self, rng):
        lengths = rng.integers(5, 200, size=60)
        plan = make_batches(lengths, 500, rng)
        assert all(sum(lengths[i] for i in batch) <= 500 for batch in plan.batches)

    def test_batches_hold_similar_lengths(self, rng):
        lengths = rng.integers(5, 200, size=60)
        plan = make_batches(lengths, 500, rng)
        spans = sorted((min(lengths[i] for i in b), max(lengths[i] for i in b)) for b in plan.batches)
        for (_, high), (low, _) in zip(spans, spans[1:]):
            assert high <= low

    def test_long_utterances_excluded(self, rng):
        plan = make_batches([100, 1600, 200, 1500], 6000, rng)
        assert plan.excluded == [1]
        assert plan.included == 3

    def test_raw_frame_counts_decide_exclusion(self, rng):
        plan = make_batches([10, 10, 10], 100, rng, frame_counts=[2000, 100, 1501])
        assert plan.excluded == [0, 2]
        assert plan.batches == [[1]]

    def test_everything_excluded(self, rng):
        plan = make_batches([2000, 3000], 6000, rng)
        assert plan.batches == []
        assert plan.mean_batch_size == 0.0

    def test_budget_below_longest(self, rng):
        with pytest.raises(ParameterError):
            make_batches([10, 50], 40, rng)

    def test_deterministic_for_a_seed(self):
        lengths = list(range(1, 80))
        a = make_batches(lengths, 120, np.random.default_rng(7))
        b = make_batches(lengths, 120, np.random.default_rng(7))
        assert a.batches == b.batches


class TestTrainLog:
    def record(self, epoch, bleu):
        return EpochRecord(epoch=epoch, train_loss=1.0 / epoch, dev_bleu=bleu, lr=0.001, steps=epoch * 3)

    def test_best_epoch_tracks_strict_improvement(self):
        log = TrainLog()
        flags = [log.add(self.record(e, b)) for e, b in enumerate([1.0, 3.0, 3.0, 2.0], start=1)]
        assert flags == [True, True, False, False]
        assert log.best_epoch == 2
        assert log.best_record.dev_bleu == 3.0
        assert log.steps == 12

    def test_without_validation_the_latest_epoch_wins(self):
        log = TrainLog()
        for epoch in (1, 2, 3):
            log.add(self.record(epoch, None))
        assert log.best_epoch == 3

    def test_epochs_must_increase(self):
        log = TrainLog()
        log.add(self.record(2, 1.0))
        with pytest.raises(ContractError):
            log.add(self.record(2, 2.0))

    def test_store_round_trip(self, tmp_path):
        store = TrainLogStore(tmp_path / "logs" / "train_log.jsonl")
        records = [self.record(1, 1.5), self.record(2, None)]
        for r in records:
            store.append(r)
        assert store.read_all() == records
        store.reset()
        assert store.read_all() == []

    def test_tsv(self, tmp_path):
        log = TrainLog()
        log.add(self.record(1, 12.5))
        log.add(self.record(2, None))
        log.write_tsv(tmp_path / "log.tsv")
        header, first, second = (tmp_path / "log.tsv").read_text().splitlines()
        assert header.split("\t")[:3] == ["epoch", "train_loss", "dev_bleu"]
        assert first.split("\t")[2] == "12.5000"
        assert second.split("\t")[2] == ""


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert (config.lr, config.decay, config.first_patience, config.patience) == (0.0003, 0.5, 10, 5)
        assert (config.beam, config.alpha, config.frame_budget) == (15, 1.5, 6000)

    def test_one_subset_request(self):
        with pytest.raises(ValidationError):
            RunConfig(train_fraction=0.5, train_size=10)

    def test_min_lr_below_lr(self):
        with pytest.raises(ValidationError):
            RunConfig(lr=1e-5, min_lr=1e-5)

    def test_variant_from_string(self):
        assert RunConfig.model_validate({"variant": "phone_e2e"}).variant is VariantTag.PHONE_E2E


class TestCorpusPreparation:
    def test_gold_tier_leaves_alignments(self, tiny_corpus):
        degraded, report = degrade_alignments(tiny_corpus, get_tier(TierName.GOLD), seed=0)
        assert degraded is tiny_corpus
        assert report.substituted == 0

    def test_low_tier_is_seeded(self, tiny_corpus):
        tier = get_tier(TierName.LOW)
        a, report = degrade_alignments(tiny_corpus, tier, seed=0)
        b, _ = degrade_alignments(tiny_corpus, tier, seed=0)
        assert [u.alignment.labels for u in a] == [u.alignment.labels for u in b]
        assert report.substituted > 0
        for before, after in zip(tiny_corpus, a):
            assert after.alignment.num_frames == before.alignment.num_frames
            assert after.source == before.source

    def test_prepare_applies_subset_and_cmvn(self, tiny_corpus):
        config = RunConfig(train_size=10, seed=1)
        prepared, _ = prepare_corpus(tiny_corpus, config, get_tier(TierName.GOLD))
        assert len(prepared.split("train")) == 10
        assert len(prepared.split("dev")) == len(tiny_corpus.split("dev"))
        frames = np.concatenate([u.features.frames for u in prepared])
        np.testing.assert_allclose(frames.mean(axis=0), 0.0, atol=1e-8)

    def test_check_corpus_rejects_unknown_labels(self, tiny_corpus):
        utt = tiny_corpus.split("train")[0]
        bad_alignment = PhoneAlignment(utt.utt_id, ["zz"] * utt.num_frames)
        splits = dict(tiny_corpus.splits, train=[utt.with_alignment(bad_alignment)])
        with pytest.raises(ConsistencyError):
            check_corpus(Corpus(splits, tiny_corpus.inventory))


class TestTrainStep:
    def test_step_keeps_unit_target_embeddings(self, tiny_corpus, tiny_arch):
        config = RunConfig(arch=tiny_arch, bpe_merges=20)
        variant = get_variant(VariantTag.BASELINE_E2E)
        train_utts = tiny_corpus.split("train")
        resources = ModelResources.build(variant, train_utts, tiny_corpus.inventory, 20)
        examples = build_examples(variant, train_utts[:4], resources)
        model = build_model(config, resources, train_utts[0].features.dim)
        loss, tokens = train_step(model, AdamState(lr=0.01), examples, np.random.default_rng(0))
        assert np.isfinite(loss) and loss > 0
        assert tokens == sum(len(e.target) for e in examples)
        norms = np.linalg.norm(model.params["tgt.embed"].values, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-9)


def _tiny_run(tiny_arch, output_dir=None, **overrides) -> RunConfig:
    data = dict(
        variant=VariantTag.BASELINE_E2E,
        arch=tiny_arch,
        max_epochs=3,
        lr=0.003,
        beam=2,
        bpe_merges=20,
        output_dir=None if output_dir is None else str(output_dir),
    )
    data.update(overrides)
    return RunConfig(**data)


@pytest.mark.slow
class TestTrain:
    def test_deterministic(self, tiny_corpus, tiny_arch):
        a = train(_tiny_run(tiny_arch), tiny_corpus)
        b = train(_tiny_run(tiny_arch), tiny_corpus)
        assert a.log.losses == b.log.losses
        assert [r.dev_bleu for r in a.log.records] == [r.dev_bleu for r in b.log.records]

    def test_loss_falls(self, tiny_corpus, tiny_arch):
        result = train(_tiny_run(tiny_arch, max_epochs=6, lr=0.01, frame_budget=300, validate_each_epoch=False), tiny_corpus)
        assert result.log.losses[-1] < result.log.losses[0]
        assert result.log.best_epoch == 6

    def test_artifacts_reload(self, tiny_corpus, tiny_arch, tmp_path):
        config = _tiny_run(tiny_arch, tmp_path / "model", max_epochs=2)
        result = train(config, tiny_corpus)
        for name in ("checkpoint.json", "run_config.json", "train_log.jsonl", "train_log.tsv", "target.vocab"):
            assert (tmp_path / "model" / name).exists()
        assert load_run_config(tmp_path / "model" / "run_config.json") == config
        assert len(read_train_log(tmp_path / "model").records) == 2

        loaded = load_translator(tmp_path / "model")
        item = result.translator.source_for(result.corpus.split("dev")[0])
        expected = beam_search(result.model, collate_sources([item]), beam=2).best
        assert beam_search(loaded.model, collate_sources([item]), beam=2).best.tokens == expected.tokens

    def test_phone_variant_trains(self, tiny_corpus, tiny_arch):
        result = train(_tiny_run(tiny_arch, variant=VariantTag.MT_OVER_PHONES, tier=TierName.MED, max_epochs=1), tiny_corpus)
        assert len(result.log.records) == 1
        assert result.checkpoint.metadata["tier"] == "med"


OVERFIT_ARCH = ArchConfig(
    hidden=32,
    attention_units=16,
    embedding_dim=16,
    dropout=0.0,
    embedding_dropout=0.0,
    label_smoothing=0.0,
)


@pytest.fixture(scope="module")
def twenty_utterances() -> Corpus:
    return generate(SynthConfig(**dict(TINY_SYNTH, train_size=20)))


def overfit_run(tag: VariantTag, corpus: Corpus) -> Tuple[RunConfig, ModelResources]:
    """50-epoch run with a budget of about three utterances per batch."""
    config = RunConfig(variant=tag, arch=OVERFIT_ARCH, max_epochs=50, lr=0.01, bpe_merges=20, validate_each_epoch=False)
    variant = get_variant(tag.value)
    prepared, _ = prepare_corpus(corpus, config, get_tier(config.tier))
    train_utts = prepared.split("train")
    resources = ModelResources.build(variant, train_utts, prepared.inventory, config.bpe_merges)
    longest = max(e.length for e in build_examples(variant, train_utts, resources))
    return config.model_copy(update={"frame_budget": 2 * longest}), resources


@pytest.mark.slow
class TestOverfit:
    @pytest.mark.parametrize("tag", list(VariantTag))
    def test_twenty_utterances_fit_within_fifty_epochs(self, twenty_utterances, tag):
        config, resources = overfit_run(tag, twenty_utterances)
        result = train(config, twenty_utterances, resources)
        assert len(result.log.losses) == 50
        assert min(result.log.losses) < 0.5

    def test_baseline_loss_falls_every_early_epoch(self, twenty_utterances):
        config, resources = overfit_run(VariantTag.BASELINE_E2E, twenty_utterances)
        losses = train(config.model_copy(update={"max_epochs": 5}), twenty_utterances, resources).log.losses
        assert all(b < a for a, b in zip(losses, losses[1:]))
