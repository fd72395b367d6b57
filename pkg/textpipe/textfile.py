"""``id<TAB>text`` line files used for transcripts, references and hypotheses."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Iterable, Tuple

from numcore.errors import ParseError


def read_id_text(path: Path) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ParseError("text file not found", str(path))
    entries: Dict[str, str] = {}
    for line_number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        utt_id, sep, text = line.partition("\t")
        if not sep or not utt_id:
            raise ParseError("expected 'id<TAB>text'", str(path), line_number)
        if utt_id in entries:
            raise ParseError(f"duplicate id {utt_id}", str(path), line_number)
        entries[utt_id] = text
    return entries


def write_id_text(path: Path, rows: Iterable[Tuple[str, str]]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for utt_id, text in rows:
            handle.write(f"{utt_id}\t{text}\n")
            count += 1
    return count
