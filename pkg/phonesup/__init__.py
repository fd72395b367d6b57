from .alignment import SILENCE, PhoneAlignment, PhoneInventory, Segment, collapse_runs, expand, segments
from .transforms import average_by_segment, factor_concat, length_reduction
from .quality import (
    TIER_ORDER,
    TIERS,
    ConfusionTable,
    CorruptionReport,
    QualityTier,
    TierName,
    corrupt,
    corrupt_with_report,
    get_tier,
)
from .io import check_frame_counts, load_alignment, parse_alignment_line, write_alignments

__all__ = [
    "SILENCE",
    "PhoneAlignment",
    "PhoneInventory",
    "Segment",
    "collapse_runs",
    "expand",
    "segments",
    "average_by_segment",
    "factor_concat",
    "length_reduction",
    "TIER_ORDER",
    "TIERS",
    "ConfusionTable",
    "CorruptionReport",
    "QualityTier",
    "TierName",
    "corrupt",
    "corrupt_with_report",
    "get_tier",
    "check_frame_counts",
    "load_alignment",
    "parse_alignment_line",
    "write_alignments",
]
