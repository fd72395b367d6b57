from .bleu import avg_single_ref_bleu, compute_bleu, corpus_bleu, segment_stats
from .report import ScoreReport, write_report
from .wer import error_rate, wer, wer_report

__all__ = [
    "ScoreReport",
    "avg_single_ref_bleu",
    "compute_bleu",
    "corpus_bleu",
    "error_rate",
    "segment_stats",
    "wer",
    "wer_report",
    "write_report",
]
