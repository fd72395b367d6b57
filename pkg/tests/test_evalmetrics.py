from __future__ import annotations

import json
import math

import pytest

from evalmetrics import (
    ScoreReport,
    avg_single_ref_bleu,
    compute_bleu,
    corpus_bleu,
    error_rate,
    segment_stats,
    wer,
    wer_report,
    write_report,
)
from evalmetrics.bleu import closest_ref_length, extract_ngrams
from numcore.errors import ContractError, ParameterError
from numcore.rng import derive

HYPS = ["the cat sat on the mat", "a dog ran fast", "birds fly south in winter"]
REFS = [
    ["the cat sat on a mat", "a cat sat on the mat"],
    ["the dog ran quickly", "a dog ran fast today"],
    ["birds fly south for the winter"],
]


class TestNgrams:
    def test_counts_every_order(self):
        counts = extract_ngrams("a b a".split(), max_n=2)
        assert counts[("a",)] == 2
        assert counts[("a", "b")] == 1
        assert sum(counts.values()) == 5

    @pytest.mark.parametrize(
        "hyp_len, refs, expected",
        [(5, [3, 7], 3), (5, [4, 6], 4), (5, [5, 9], 5), (2, [1, 3], 1)],
    )
    def test_closest_ref_length_prefers_shorter_on_ties(self, hyp_len, refs, expected):
        assert closest_ref_length(hyp_len, refs) == expected

    def test_clipping(self):
        matches, totals, hyp_len, ref_len = segment_stats("the the the", ["the cat"], max_n=1)
        assert matches == [1]
        assert totals == [3]
        assert (hyp_len, ref_len) == (3, 2)


class TestBleu:
    def test_identity_scores_100(self):
        report = corpus_bleu(HYPS, [[h] for h in HYPS])
        assert report.value == pytest.approx(100.0)
        assert report.brevity_penalty == 1.0

    def test_brevity_penalty(self):
        report = corpus_bleu(["a b c d"], [["a b c d e"]])
        assert report.brevity_penalty == pytest.approx(math.exp(-0.25))
        assert report.value == pytest.approx(77.88, abs=0.01)

    def test_closest_reference_length_drives_the_penalty(self):
        report = corpus_bleu(["a a"], [["a", "a a a"]], max_n=1)
        assert report.ref_len == 1
        assert report.value == pytest.approx(100.0)

    def test_zero_precision_gives_zero(self):
        assert corpus_bleu(["x y z w"], [["a b c d"]]).value == 0.0

    def test_empty_hypothesis(self):
        report = corpus_bleu([""], [["a b c d"]])
        assert report.value == 0.0
        assert report.brevity_penalty == 0.0

    def test_add_one_smoothing_leaves_unigrams_alone(self):
        plain = corpus_bleu(["a b"], [["a c"]], max_n=2)
        smoothed = corpus_bleu(["a b"], [["a c"]], max_n=2, smoothing=True)
        assert plain.value == 0.0
        assert smoothed.precisions == pytest.approx([50.0, 50.0])
        assert smoothed.value == pytest.approx(50.0)

    def test_reference_order_does_not_matter(self):
        flipped = [list(reversed(refs)) for refs in REFS]
        assert corpus_bleu(HYPS, REFS).value == pytest.approx(corpus_bleu(HYPS, flipped).value)

    def test_segment_order_does_not_matter(self):
        order = [2, 0, 1]
        shuffled = corpus_bleu([HYPS[i] for i in order], [REFS[i] for i in order])
        assert shuffled.value == pytest.approx(corpus_bleu(HYPS, REFS).value)

    def test_score_range(self):
        value = corpus_bleu(HYPS, REFS).value
        assert 0.0 < value < 100.0

    def test_extra_reference_of_equal_length_never_hurts(self):
        single = corpus_bleu(["a b c d"], [["a b x y"]], max_n=2)
        double = corpus_bleu(["a b c d"], [["a b x y", "x b c d"]], max_n=2)
        assert single.value == pytest.approx(100 * math.sqrt(1 / 6))
        assert double.value == pytest.approx(100.0)

    def test_compute_matches_corpus_statistics(self):
        report = compute_bleu([4, 3, 2, 1], [4, 3, 2, 1], 4, 4)
        assert report.value == pytest.approx(100.0)

    def test_mismatched_lengths(self):
        with pytest.raises(ContractError):
            corpus_bleu(HYPS, REFS[:2])

    def test_empty_reference_set(self):
        with pytest.raises(ContractError):
            corpus_bleu(["a"], [[]])

    def test_bad_order(self):
        with pytest.raises(ParameterError):
            corpus_bleu(["a"], [["a"]], max_n=0)


class TestAvgSingleRef:
    def test_mean_of_streams(self):
        streams = [["a b c d", "e f g h"], ["a b c x", "e f g h"]]
        hyps = ["a b c d", "e f g h"]
        report = avg_single_ref_bleu(hyps, streams)
        per_stream = [corpus_bleu(hyps, [[r] for r in s]).value for s in streams]
        assert report.streams == pytest.approx(per_stream)
        assert report.value == pytest.approx(sum(per_stream) / 2)
        assert report.metric == "AvgBLEU"

    def test_stream_length_mismatch(self):
        with pytest.raises(ContractError):
            avg_single_ref_bleu(["a", "b"], [["a"]])

    def test_no_streams(self):
        with pytest.raises(ContractError):
            avg_single_ref_bleu(["a"], [])


def levenshtein(a, b) -> int:
    row = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        previous, row[0] = row[0], i
        for j, y in enumerate(b, 1):
            previous, row[j] = row[j], min(row[j] + 1, row[j - 1] + 1, previous + (x != y))
    return row[-1]


class TestWer:
    def test_one_substitution(self):
        assert wer(["a x c"], ["a b c"]) == pytest.approx(1 / 3)

    def test_identical(self):
        assert wer(HYPS, HYPS) == 0.0

    def test_empty_hypothesis(self):
        assert wer([""], ["a b c"]) == pytest.approx(1.0)

    def test_can_exceed_one(self):
        assert wer(["a b c d"], ["x"]) == pytest.approx(4.0)

    def test_pooled_over_corpus(self):
        assert wer(["a b", "c"], ["a b", "d e f"]) == pytest.approx(3 / 5)

    def test_phone_error_rate_on_token_lists(self):
        assert error_rate([["p1", "p2"]], [["p1", "p3", "p2"]]) == pytest.approx(1 / 3)

    def test_matches_edit_distance_on_random_pairs(self):
        rng = derive(0, "wer-pairs")
        words = ["a", "b", "c", "d", "e"]
        hyps, refs = [], []
        edits = 0
        for _ in range(1000):
            hyp = [words[i] for i in rng.integers(0, len(words), size=int(rng.integers(0, 9)))]
            ref = [words[i] for i in rng.integers(0, len(words), size=int(rng.integers(1, 9)))]
            assert wer([" ".join(hyp)], [" ".join(ref)]) == levenshtein(hyp, ref) / len(ref)
            hyps.append(" ".join(hyp))
            refs.append(" ".join(ref))
            edits += levenshtein(hyp, ref)
        assert wer(hyps, refs) == edits / sum(len(r.split()) for r in refs)

    def test_empty_reference_corpus(self):
        with pytest.raises(ContractError):
            wer(["a"], [""])

    def test_report(self):
        report = wer_report(["a x c"], ["a b c"])
        assert report.value == pytest.approx(100 / 3)
        assert (report.hyp_len, report.ref_len) == (3, 3)
        assert report.format().startswith("WER = 33.33")


class TestReportFiles:
    def test_json_and_tsv(self, tmp_path):
        report = corpus_bleu(HYPS, REFS)
        write_report(report, tmp_path / "out" / "bleu.json", tmp_path / "bleu.tsv")
        loaded = ScoreReport.from_dict(json.loads((tmp_path / "out" / "bleu.json").read_text()))
        assert loaded == report
        header, row = (tmp_path / "bleu.tsv").read_text().splitlines()
        assert header.split("\t")[0] == "metric"
        assert row.split("\t")[0] == "BLEU"
        assert row.split("\t")[-1] == "none"

    def test_format_shows_brevity_penalty(self):
        text = str(corpus_bleu(["a b c d"], [["a b c d e"]]))
        assert text.startswith("BLEU = 77.88")
        assert "BP = 0.779" in text
