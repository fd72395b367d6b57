"""Score reports and their JSON / TSV serialisations."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

TSV_COLUMNS = ("metric", "value", "precisions", "brevity_penalty", "hyp_len", "ref_len", "max_n", "smoothing")


@dataclass
class ScoreReport:
    metric: str
    value: float
    precisions: List[float] = field(default_factory=list)
    brevity_penalty: float = 1.0
    hyp_len: int = 0
    ref_len: int = 0
    max_n: int = 4
    smoothing: bool = False
    streams: List[float] = field(default_factory=list)

    def format(self, width: int = 2) -> str:
        if self.metric == "WER":
            return f"WER = {self.value:.{width}f} (hyp_len = {self.hyp_len} ref_len = {self.ref_len})"
        precisions = "/".join(f"{p:.1f}" for p in self.precisions)
        ratio = self.hyp_len / self.ref_len if self.ref_len else 0.0
        return (
            f"{self.metric} = {self.value:.{width}f} {precisions} "
            f"(BP = {self.brevity_penalty:.3f} ratio = {ratio:.3f} hyp_len = {self.hyp_len} ref_len = {self.ref_len})"
        )

    def __str__(self) -> str:
        return self.format()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreReport":
        return cls(**data)

    def tsv_row(self) -> str:
        precisions = ",".join(f"{p:.4f}" for p in self.precisions)
        return "\t".join(
            [
                self.metric,
                f"{self.value:.4f}",
                precisions,
                f"{self.brevity_penalty:.6f}",
                str(self.hyp_len),
                str(self.ref_len),
                str(self.max_n),
                "add1" if self.smoothing else "none",
            ]
        )


def write_report(report: ScoreReport, json_path: Path, tsv_path: Optional[Path] = None) -> None:
    json_path = Path(json_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if tsv_path is not None:
        Path(tsv_path).write_text("\t".join(TSV_COLUMNS) + "\n" + report.tsv_row() + "\n", encoding="utf-8")
