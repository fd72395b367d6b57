"""Alignment TSV: ``utterance_id<TAB>space-separated frame labels``."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional

from numcore.errors import ConsistencyError, ParseError

from .alignment import PhoneAlignment

logger = logging.getLogger(__name__)


def parse_alignment_line(line: str, path: Optional[str] = None, line_number: Optional[int] = None) -> PhoneAlignment:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 2:
        raise ParseError("expected 'id<TAB>labels'", path, line_number)
    utt_id, field = parts[0].strip(), parts[1].strip()
    if not utt_id:
        raise ParseError("empty utterance id", path, line_number)
    if not field:
        raise ParseError(f"empty label field for {utt_id}", path, line_number)
    return PhoneAlignment(utt_id, field.split())


def load_alignment(path: Path) -> Dict[str, PhoneAlignment]:
    path = Path(path)
    if not path.exists():
        raise ParseError("alignment file not found", str(path))
    alignments: Dict[str, PhoneAlignment] = {}
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            alignment = parse_alignment_line(line, str(path), line_number)
            if alignment.utt_id in alignments:
                raise ParseError(f"duplicate utterance id {alignment.utt_id}", str(path), line_number)
            alignments[alignment.utt_id] = alignment
    logger.debug("Loaded %d alignments from %s", len(alignments), path)
    return alignments


def write_alignments(path: Path, alignments: Iterable[PhoneAlignment]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for alignment in alignments:
            handle.write(f"{alignment.utt_id}\t{' '.join(alignment.labels)}\n")
            count += 1
    return count


def check_frame_counts(alignments: Mapping[str, PhoneAlignment], frame_counts: Mapping[str, int]) -> None:
    """Cross-check alignment lengths against feature frame counts."""
    for utt_id, frames in frame_counts.items():
        alignment = alignments.get(utt_id)
        if alignment is None:
            raise ConsistencyError("no alignment for utterance", utt_id)
        if alignment.num_frames != frames:
            raise ConsistencyError(
                f"alignment has {alignment.num_frames} frames but features have {frames}", utt_id
            )
