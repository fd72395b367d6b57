"""Word error rate via unit-cost edit distance."""

from __future__ import annotations

from typing import Sequence

import editdistance

from numcore.errors import ContractError

from .report import ScoreReport


def token_error_counts(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]):
    """(total edits, total reference tokens, total hypothesis tokens) over aligned token lists."""
    if len(hypotheses) != len(references):
        raise ContractError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    edits = ref_tokens = hyp_tokens = 0
    for hyp, ref in zip(hypotheses, references):
        edits += editdistance.eval(list(hyp), list(ref))
        ref_tokens += len(ref)
        hyp_tokens += len(hyp)
    return edits, ref_tokens, hyp_tokens


def error_rate(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> float:
    """Edits over reference tokens for pre-tokenised sequences (words or phones)."""
    edits, ref_tokens, _ = token_error_counts(hypotheses, references)
    if ref_tokens == 0:
        raise ContractError("reference corpus has no tokens")
    return edits / ref_tokens


def wer(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    return error_rate([h.split() for h in hypotheses], [r.split() for r in references])


def wer_report(hypotheses: Sequence[str], references: Sequence[str], metric: str = "WER") -> ScoreReport:
    hyps = [h.split() for h in hypotheses]
    refs = [r.split() for r in references]
    edits, ref_tokens, hyp_tokens = token_error_counts(hyps, refs)
    if ref_tokens == 0:
        raise ContractError("reference corpus has no tokens")
    return ScoreReport(metric=metric, value=100.0 * edits / ref_tokens, hyp_len=hyp_tokens, ref_len=ref_tokens, max_n=0)
