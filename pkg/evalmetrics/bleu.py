"""Corpus BLEU over whitespace tokens.

Hypotheses and references are expected to be normalised already
(textpipe.normalize); scoring only splits on whitespace.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import List, Sequence, Tuple

from numcore.errors import ContractError, ParameterError

from .report import ScoreReport

MAX_ORDER = 4

Ngram = Tuple[str, ...]


def extract_ngrams(tokens: Sequence[str], max_n: int = MAX_ORDER) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def closest_ref_length(hyp_len: int, ref_lengths: Sequence[int]) -> int:
    """Reference length closest to the hypothesis; ties go to the shorter one."""
    return min(ref_lengths, key=lambda r: (abs(r - hyp_len), r))


def segment_stats(hypothesis: str, references: Sequence[str], max_n: int = MAX_ORDER) -> Tuple[List[int], List[int], int, int]:
    """(clipped matches per order, hypothesis n-grams per order, hyp length, closest ref length)."""
    hyp = hypothesis.split()
    refs = [r.split() for r in references]
    max_ref: Counter = Counter()
    for ref in refs:
        for gram, count in extract_ngrams(ref, max_n).items():
            if count > max_ref[gram]:
                max_ref[gram] = count
    matches = [0] * max_n
    totals = [max(len(hyp) - n, 0) for n in range(max_n)]
    for gram, count in extract_ngrams(hyp, max_n).items():
        matches[len(gram) - 1] += min(count, max_ref[gram])
    return matches, totals, len(hyp), closest_ref_length(len(hyp), [len(r) for r in refs])


def compute_bleu(
    matches: Sequence[int],
    totals: Sequence[int],
    hyp_len: int,
    ref_len: int,
    max_n: int = MAX_ORDER,
    smoothing: bool = False,
) -> ScoreReport:
    """BLEU from corpus sufficient statistics; add-1 smoothing applies to orders >= 2."""
    precisions: List[float] = []
    log_sum = 0.0
    zero = False
    for n in range(max_n):
        correct, total = float(matches[n]), float(totals[n])
        if smoothing and n > 0:
            correct += 1.0
            total += 1.0
        if total == 0.0 or correct == 0.0:
            precisions.append(0.0)
            zero = True
            continue
        precisions.append(100.0 * correct / total)
        log_sum += math.log(correct / total)

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0
    value = 0.0 if zero or bp == 0.0 else 100.0 * bp * math.exp(log_sum / max_n)
    return ScoreReport(
        metric="BLEU",
        value=min(value, 100.0),
        precisions=precisions,
        brevity_penalty=bp,
        hyp_len=hyp_len,
        ref_len=ref_len,
        max_n=max_n,
        smoothing=smoothing,
    )


def corpus_bleu(
    hypotheses: Sequence[str],
    references: Sequence[Sequence[str]],
    max_n: int = MAX_ORDER,
    smoothing: bool = False,
) -> ScoreReport:
    """Multi-reference corpus BLEU; references[i] is the reference set of hypotheses[i]."""
    if max_n < 1:
        raise ParameterError(f"max_n must be positive, got {max_n}")
    if len(hypotheses) != len(references):
        raise ContractError(f"{len(hypotheses)} hypotheses but {len(references)} reference sets")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for i, (hyp, refs) in enumerate(zip(hypotheses, references)):
        if not refs:
            raise ContractError(f"segment {i} has an empty reference set")
        m, t, h, r = segment_stats(hyp, refs, max_n)
        for n in range(max_n):
            matches[n] += m[n]
            totals[n] += t[n]
        hyp_len += h
        ref_len += r
    return compute_bleu(matches, totals, hyp_len, ref_len, max_n, smoothing)


def avg_single_ref_bleu(
    hypotheses: Sequence[str],
    streams: Sequence[Sequence[str]],
    max_n: int = MAX_ORDER,
    smoothing: bool = False,
) -> ScoreReport:
    """Mean of single-reference corpus BLEU against each reference stream."""
    if not streams:
        raise ContractError("no reference streams")
    reports = []
    for k, stream in enumerate(streams):
        if len(stream) != len(hypotheses):
            raise ContractError(f"reference stream {k} has {len(stream)} segments, expected {len(hypotheses)}")
        reports.append(corpus_bleu(hypotheses, [[ref] for ref in stream], max_n, smoothing))
    values = [r.value for r in reports]
    k = len(reports)
    return ScoreReport(
        metric="AvgBLEU",
        value=sum(values) / k,
        precisions=[sum(r.precisions[n] for r in reports) / k for n in range(max_n)],
        brevity_penalty=sum(r.brevity_penalty for r in reports) / k,
        hyp_len=reports[0].hyp_len,
        ref_len=round(sum(r.ref_len for r in reports) / k),
        max_n=max_n,
        smoothing=smoothing,
        streams=values,
    )
