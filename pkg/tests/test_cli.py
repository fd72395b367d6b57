from __future__ import annotations

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from cli.main import main
from cli.manifest import (
    DEFAULT_TRENDS,
    NO_TIER,
    CorpusSpec,
    ExperimentManifest,
    MetricsRow,
    ModelJob,
    SystemName,
    TrendKind,
    TrendSpec,
    size_label,
)
from cli.runner import CellLogStore, ExperimentLayout, ExperimentResult, Failure, model_jobs, run_experiment
from cli.tables import read_results, results_table, trend_table, with_deltas, write_results
from cli.trends import TrendReport, TrendStatus, assert_trends, seed_means
from config_loader import load_model_file
from conftest import TINY_SYNTH
from phonesup.quality import TierName
from stmodel.variants import VariantTag


def manifest(**overrides) -> ExperimentManifest:
    data = {"corpus": {"synth": {"seed": 0}}, "systems": ["baseline_e2e"]}
    data.update(overrides)
    return ExperimentManifest.model_validate(data)


def row(system, size, tier, seed, test, dev=None) -> MetricsRow:
    return MetricsRow(system=system, size=size, tier=tier, seed=seed, dev_bleu=test if dev is None else dev, test_bleu=test)


class TestManifest:
    def test_size_labels(self):
        assert size_label(0.25) == "25pct"
        assert size_label(1.0) == "100pct"
        assert size_label(500) == "n500"

    def test_tier_independent_systems_get_one_cell(self):
        m = manifest(
            systems=["baseline_e2e", "phone_cascade"],
            sizes=[1.0, 0.5],
            tiers=["low", "gold"],
            seeds=[0, 1],
        )
        cells = m.cells()
        baseline = [c for c in cells if c.system is SystemName.BASELINE_E2E]
        cascade = [c for c in cells if c.system is SystemName.PHONE_CASCADE]
        assert len(baseline) == 4 and {c.tier for c in baseline} == {NO_TIER}
        assert len(cascade) == 8
        assert [c.tier for c in cascade[:4]] == ["gold", "gold", "low", "low"]
        assert len({c.key for c in cells}) == len(cells)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"sizes": [0.5, 100]},
            {"sizes": [0.0]},
            {"sizes": [0.5, 0.5]},
            {"sizes": [10.5, 20]},
            {"baseline": "phone_e2e"},
            {"run": {"seed": 4}},
            {"run": {"lr": -1.0}},
            {"stage_beams": [0, 15]},
            {"systems": []},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ValidationError):
            manifest(**overrides)

    def test_corpus_needs_one_source(self):
        with pytest.raises(ValidationError):
            CorpusSpec()
        with pytest.raises(ValidationError):
            CorpusSpec(synth={"seed": 0}, corpus_dir="x")

    def test_baseline_defaults(self):
        assert manifest(systems=["phone_e2e", "baseline_cascade"]).baseline_system is SystemName.BASELINE_CASCADE
        assert manifest(systems=["phone_e2e", "baseline_e2e"]).baseline_system is SystemName.PHONE_E2E

    def test_shared_stage_models(self):
        m = manifest(systems=["baseline_cascade", "hybrid_cascade"], tiers=["gold", "low"])
        jobs = model_jobs(m.cells())
        keys = [(j.variant, j.tier) for j in jobs]
        assert keys == [
            (VariantTag.ASR_BPE, NO_TIER),
            (VariantTag.MT_OVER_TEXT, NO_TIER),
            (VariantTag.ASR_PHONE_AVG, "gold"),
            (VariantTag.ASR_PHONE_AVG, "low"),
        ]

    def test_alignment_stage_is_not_trained(self):
        m = manifest(systems=["phone_cascade", "phone_cascade_uncollapsed"])
        jobs = model_jobs(m.cells())
        assert [j.variant for j in jobs] == [VariantTag.MT_OVER_PHONES, VariantTag.MT_OVER_PHONES]
        assert [j.collapse_phones for j in jobs] == [True, False]
        assert jobs[1].key.endswith("__frames")

    @pytest.mark.parametrize(
        "size, fraction, count",
        [(1.0, None, None), (0.25, 0.25, None), (300.0, None, 300)],
    )
    def test_run_config(self, size, fraction, count):
        m = manifest(sizes=[size], run={"max_epochs": 3})
        job = ModelJob(VariantTag.PHONE_E2E, size, "med", 2)
        config = m.run_config(job, "corpus", "out")
        assert (config.train_fraction, config.train_size) == (fraction, count)
        assert config.tier is TierName.MED
        assert (config.seed, config.max_epochs, config.variant) == (2, 3, VariantTag.PHONE_E2E)

    def test_untiered_job_trains_on_gold(self):
        config = manifest().run_config(ModelJob(VariantTag.BASELINE_E2E, 1.0, NO_TIER, 0), "c", "o")
        assert config.tier is TierName.GOLD


MANIFESTS = Path(__file__).resolve().parent.parent / "manifests"


class TestShippedManifests:
    def test_desk_is_the_reference_configuration(self):
        m = load_model_file(ExperimentManifest, MANIFESTS / "desk.json")
        assert m.stage_beams == (15, 15)
        assert sorted(m.sizes) == [0.125, 0.25, 1.0]
        assert len(m.seeds) == 3
        assert m.trend_specs is DEFAULT_TRENDS
        job = model_jobs(m.cells())[0]
        assert m.run_config(job, "corpus", "models").beam == 15
        synth = m.corpus.synth
        assert (synth.train_size, synth.dev_size, synth.test_size) == (2000, 200, 200)

    def test_smoke_is_a_single_seed_check_run(self):
        m = load_model_file(ExperimentManifest, MANIFESTS / "smoke.json")
        synth = m.corpus.synth
        assert synth.train_size + synth.dev_size + synth.test_size == 500
        assert m.seeds == [0]
        assert [t.kind for t in m.trend_specs] == [TrendKind.BETTER_THAN, TrendKind.BETTER_THAN, TrendKind.TIER_MONOTONE]


class TestTrends:
    def widening_rows(self, small_baseline):
        return [
            row("phone_cascade", 1.0, "gold", 0, 20.0),
            row("phone_cascade", 0.25, "gold", 0, 15.0),
            row("baseline_e2e", 1.0, NO_TIER, 0, 18.0),
            row("baseline_e2e", 0.25, NO_TIER, 0, small_baseline),
        ]

    def better_than(self, **kwargs) -> TrendSpec:
        return TrendSpec(
            name="cascade beats e2e",
            kind=TrendKind.BETTER_THAN,
            system=SystemName.PHONE_CASCADE,
            other=SystemName.BASELINE_E2E,
            **kwargs,
        )

    def test_seed_means(self):
        rows = [row("baseline_e2e", 1.0, NO_TIER, s, v) for s, v in enumerate([10.0, 14.0])]
        assert seed_means(rows, "test_bleu") == {("baseline_e2e", 1.0, NO_TIER): 12.0}

    def test_better_than_with_widening_gap(self):
        report = assert_trends(self.widening_rows(10.0), [self.better_than(widening=True)])
        result = report.results[0]
        assert result.status is TrendStatus.PASS
        assert result.margin == pytest.approx(2.0)
        assert result.gaps == {"25pct": pytest.approx(5.0), "100pct": pytest.approx(2.0)}

    def test_narrowing_gap_fails_widening(self):
        report = assert_trends(self.widening_rows(14.0), [self.better_than(widening=True)])
        assert report.results[0].status is TrendStatus.FAIL
        assert report.exit_code == 2

    @pytest.mark.parametrize(
        "gaps, status",
        [
            ((2.0, 5.0, 1.0), TrendStatus.FAIL),
            ((5.0, 2.0, 1.0), TrendStatus.PASS),
            ((3.0, 3.0, 1.0), TrendStatus.PASS),
            ((0.0, 0.0, 0.0), TrendStatus.PASS),
        ],
    )
    def test_widening_needs_largest_gap_at_smallest_size(self, gaps, status):
        trend = next(t for t in DEFAULT_TRENDS if t.other is SystemName.PHONE_CASCADE_UNCOLLAPSED)
        rows = []
        for size, gap in zip((0.125, 0.25, 1.0), gaps):
            rows.append(row("phone_cascade", size, "gold", 0, 20.0))
            rows.append(row("phone_cascade_uncollapsed", size, "gold", 0, 20.0 - gap))
        result = assert_trends(rows, [trend]).results[0]
        assert result.status is status
        assert set(result.gaps) == {"12.5pct", "25pct", "100pct"}

    def test_narrowing_gap_passes_plain_ordering(self):
        report = assert_trends(self.widening_rows(14.0), [self.better_than()])
        assert report.results[0].status is TrendStatus.PASS

    def test_min_margin(self):
        report = assert_trends(self.widening_rows(10.0), [self.better_than(min_margin=3.0)])
        assert report.results[0].status is TrendStatus.FAIL

    def test_missing_cells_are_unevaluable(self):
        rows = [r for r in self.widening_rows(10.0) if r.system == "phone_cascade"]
        report = assert_trends(rows, [self.better_than()])
        assert report.results[0].status is TrendStatus.UNEVALUABLE
        assert report.passed and report.exit_code == 0

    def test_tier_monotone(self):
        spec = TrendSpec(name="tiers", kind=TrendKind.TIER_MONOTONE, system=SystemName.PHONE_CASCADE, strict=False)
        scores = {"gold": 20.0, "high": 19.0, "med": 19.0, "low": 15.0}
        rows = [row("phone_cascade", 1.0, tier, 0, v) for tier, v in scores.items()]
        assert assert_trends(rows, [spec]).results[0].status is TrendStatus.PASS
        rows[-1] = row("phone_cascade", 1.0, "low", 0, 19.5)
        assert assert_trends(rows, [spec]).results[0].status is TrendStatus.FAIL
        assert assert_trends(rows[:3], [spec]).results[0].status is TrendStatus.UNEVALUABLE

    def test_tier_monotone_needs_a_tiered_system(self):
        spec = TrendSpec(name="tiers", kind=TrendKind.TIER_MONOTONE, system=SystemName.BASELINE_E2E)
        rows = [row("baseline_e2e", 1.0, NO_TIER, 0, 10.0)]
        assert assert_trends(rows, [spec]).results[0].status is TrendStatus.UNEVALUABLE

    def test_better_than_needs_other(self):
        with pytest.raises(ValidationError):
            TrendSpec(name="x", kind=TrendKind.BETTER_THAN, system=SystemName.PHONE_E2E)

    def test_report_file(self, tmp_path):
        report = assert_trends(self.widening_rows(10.0), [self.better_than()])
        report.write(tmp_path / "trends.json")
        data = json.loads((tmp_path / "trends.json").read_text())
        assert data["passed"] is True
        assert data["counts"] == {"pass": 1, "fail": 0, "unevaluable": 0}
        assert trend_table(report).row_count == 1


class TestTables:
    def rows(self):
        return [
            row("baseline_e2e", 1.0, NO_TIER, 0, 10.0),
            row("phone_cascade", 1.0, "gold", 0, 13.0, dev=12.0),
            row("phone_cascade", 1.0, "low", 0, 9.5, dev=9.0),
            row("phone_cascade", 0.5, "gold", 0, 8.0),
        ]

    def test_deltas_against_untiered_baseline(self):
        records = with_deltas(self.rows(), "baseline_e2e")
        assert records[0]["delta_test"] == 0.0
        assert records[1]["delta_test"] == pytest.approx(3.0)
        assert records[1]["delta_dev"] == pytest.approx(2.0)
        assert records[2]["delta_test"] == pytest.approx(-0.5)
        assert records[3]["delta_test"] is None

    def test_write_and_read(self, tmp_path):
        rows = self.rows()
        write_results(rows, "baseline_e2e", tmp_path)
        assert read_results(tmp_path / "results.json") == rows
        lines = (tmp_path / "results.tsv").read_text().splitlines()
        assert len(lines) == 1 + len(rows)
        header = lines[0].split("\t")
        second = dict(zip(header, lines[2].split("\t")))
        assert second["size"] == "1"
        assert second["delta_test"] == "3.00"
        assert dict(zip(header, lines[4].split("\t")))["delta_test"] == ""

    def test_console_table(self):
        assert results_table(with_deltas(self.rows(), "baseline_e2e")).row_count == 4


class TestRunnerPieces:
    def test_layout(self, tmp_path):
        m = manifest(systems=["phone_cascade"])
        cell = m.cells()[0]
        layout = ExperimentLayout(tmp_path)
        assert layout.cell_dir(cell) == tmp_path / "cells" / cell.key
        assert not layout.cell_done(cell)
        job = model_jobs([cell])[0]
        assert layout.model_dir(job).parent == tmp_path / "models"
        assert not layout.model_done(job)

    def test_cell_log(self, tmp_path):
        store = CellLogStore(tmp_path / "c" / "log.jsonl")
        store.append("trained", model="m", steps=3)
        store.append("failed", model="m", error="boom")
        events = store.read_all()
        assert [e["event"] for e in events] == ["trained", "failed"]
        assert events[0]["steps"] == 3 and "time" in events[0]

    def test_exit_codes(self):
        passing = TrendReport([])
        failing = assert_trends(
            [row("phone_e2e", 1.0, "gold", 0, 1.0), row("baseline_e2e", 1.0, NO_TIER, 0, 2.0)],
            [TrendSpec(name="t", kind=TrendKind.BETTER_THAN, system=SystemName.PHONE_E2E, other=SystemName.BASELINE_E2E)],
        )
        assert ExperimentResult([], [], trends=passing).exit_code == 0
        assert ExperimentResult([], [], trends=failing).exit_code == 2
        assert ExperimentResult([], [], failures=[Failure("k", "e")], trends=failing).exit_code == 1


class TestCommandLine:
    def test_score_bleu_and_wer(self, tmp_path):
        (tmp_path / "hyp.txt").write_text("u1\tthe cat sat down\nu2\ta dog ran away fast\n")
        (tmp_path / "ref.txt").write_text("u2\ta dog ran away fast\nu1\tthe cat sat down\n")
        out = tmp_path / "bleu.json"
        assert main(["score", "--hyp", str(tmp_path / "hyp.txt"), "--ref", str(tmp_path / "ref.txt"), "--json", str(out)]) == 0
        assert json.loads(out.read_text())["value"] == pytest.approx(100.0)

        out = tmp_path / "wer.json"
        args = ["score", "--metric", "wer", "--hyp", str(tmp_path / "hyp.txt"), "--ref", str(tmp_path / "ref.txt")]
        assert main(args + ["--json", str(out)]) == 0
        assert json.loads(out.read_text())["value"] == 0.0

    def test_score_missing_reference(self, tmp_path):
        (tmp_path / "hyp.txt").write_text("u1\ta\nu9\tb\n")
        (tmp_path / "ref.txt").write_text("u1\ta\n")
        assert main(["score", "--hyp", str(tmp_path / "hyp.txt"), "--ref", str(tmp_path / "ref.txt")]) == 1

    def test_missing_required_option(self):
        assert main(["score", "--hyp", "h.txt"]) == 1

    def test_bpe_learn_apply_decode(self, tmp_path):
        lines = ["the cat sat on the mat", "the dog sat on the log", "a cat and a dog"]
        (tmp_path / "train.txt").write_text("\n".join(lines) + "\n")
        prefix = str(tmp_path / "model")
        assert main(["bpe", "learn", "--model", prefix, "--input", str(tmp_path / "train.txt"), "--merges", "8"]) == 0
        assert (tmp_path / "model.bpe").exists() and (tmp_path / "model.vocab").exists()
        pieces = tmp_path / "pieces.txt"
        assert main(["bpe", "apply", "--model", prefix, "--input", str(tmp_path / "train.txt"), "--output", str(pieces)]) == 0
        restored = tmp_path / "restored.txt"
        assert main(["bpe", "decode", "--model", prefix, "--input", str(pieces), "--output", str(restored)]) == 0
        assert restored.read_text().splitlines() == lines

    def test_options_from_config_file(self, tmp_path):
        (tmp_path / "hyp.txt").write_text("u1\ta b c\n")
        (tmp_path / "ref.txt").write_text("u1\ta b c\n")
        config = tmp_path / "score.json"
        config.write_text(json.dumps({"hyp": str(tmp_path / "hyp.txt"), "ref": [str(tmp_path / "ref.txt")], "json": str(tmp_path / "o.json")}))
        assert main(["score", "--config", str(config)]) == 0
        assert (tmp_path / "o.json").exists()

    def test_unknown_config_option(self, tmp_path):
        config = tmp_path / "score.json"
        config.write_text(json.dumps({"hyp": "h", "ref": ["r"], "beam": 3}))
        assert main(["score", "--config", str(config)]) == 1

    def test_assert_trends_exit_code(self, tmp_path):
        rows = [row("phone_e2e", 1.0, "gold", 0, 1.0), row("baseline_e2e", 1.0, NO_TIER, 0, 2.0)]
        write_results(rows, "baseline_e2e", tmp_path)
        assert main(["assert-trends", "--results", str(tmp_path / "results.json"), "--out", str(tmp_path / "t.json")]) == 2
        data = json.loads((tmp_path / "t.json").read_text())
        assert data["counts"]["fail"] == 1


def tiny_grid(output_dir) -> ExperimentManifest:
    return ExperimentManifest.model_validate(
        {
            "name": "tiny",
            "output_dir": str(output_dir),
            "corpus": {"synth": TINY_SYNTH},
            "systems": ["baseline_e2e", "phone_cascade"],
            "sizes": [1.0],
            "tiers": ["gold", "low"],
            "seeds": [0],
            "baseline": "baseline_e2e",
            "run": {
                "max_epochs": 1,
                "bpe_merges": 20,
                "beam": 2,
                "arch": {"hidden": 4, "attention_units": 4, "embedding_dim": 4},
            },
            "stage_beams": [2, 2],
        }
    )


def pipeline_outputs(root) -> dict:
    """Relative path -> bytes for the corpus, checkpoints, cell metrics and results files."""
    patterns = ["corpus/**/*", "models/*/checkpoint.json", "cells/*/metrics.json", "results.*", "trends.json"]
    return {
        str(path.relative_to(root)): path.read_bytes()
        for pattern in patterns
        for path in sorted(root.glob(pattern))
        if path.is_file()
    }


@pytest.mark.slow
class TestExperiment:
    def test_grid_runs_and_resumes(self, tmp_path):
        m = tiny_grid(tmp_path / "exp")
        result = run_experiment(m)
        assert result.failures == []
        assert len(result.rows) == 3
        assert sorted(result.trained) == sorted(j.key for j in model_jobs(m.cells()))
        for r in result.rows:
            assert 0.0 <= r.test_bleu <= 100.0
            assert (r.stage1_metric == "PER") == (r.system == "phone_cascade")
        gold_cascade = next(r for r in result.rows if r.system == "phone_cascade" and r.tier == "gold")
        assert gold_cascade.stage1_test == 0.0
        assert (tmp_path / "exp" / "results.tsv").exists()
        assert (tmp_path / "exp" / "trends.json").exists()

        again = run_experiment(m)
        assert again.trained == [] and again.evaluated == []
        assert again.rows == result.rows

    def test_same_seed_gives_identical_files(self, tmp_path):
        first = run_experiment(tiny_grid(tmp_path / "a"))
        second = run_experiment(tiny_grid(tmp_path / "b"))
        assert first.failures == [] and second.failures == []
        a, b = pipeline_outputs(tmp_path / "a"), pipeline_outputs(tmp_path / "b")
        assert {"results.tsv", "results.json", "trends.json"} <= set(a)
        assert any(name.startswith("models/") for name in a)
        assert sorted(a) == sorted(b)
        for name in a:
            assert a[name] == b[name], name
