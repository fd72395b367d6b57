"""Per-epoch training records."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

from numcore.errors import ContractError

TSV_COLUMNS = ("epoch", "train_loss", "dev_bleu", "lr", "steps", "wall_time")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_bleu: Optional[float]
    lr: float
    steps: int
    wall_time: float = 0.0
    excluded: int = 0


@dataclass
class TrainLog:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None

    def add(self, record: EpochRecord) -> bool:
        """Append a record; True when it becomes the best epoch."""
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ContractError(f"epoch {record.epoch} does not follow {self.records[-1].epoch}")
        self.records.append(record)
        if record.dev_bleu is None:
            # Without validation the latest epoch is kept.
            self.best_epoch = record.epoch
            return True
        best = self.best_record
        if best is None or best.dev_bleu is None or record.dev_bleu > best.dev_bleu:
            self.best_epoch = record.epoch
            return True
        return False

    @property
    def best_record(self) -> Optional[EpochRecord]:
        for record in self.records:
            if record.epoch == self.best_epoch:
                return record
        return None

    @property
    def losses(self) -> List[float]:
        return [r.train_loss for r in self.records]

    @property
    def steps(self) -> int:
        return self.records[-1].steps if self.records else 0

    def write_tsv(self, path: Path) -> None:
        lines = ["\t".join(TSV_COLUMNS)]
        for r in self.records:
            bleu = "" if r.dev_bleu is None else f"{r.dev_bleu:.4f}"
            lines.append(f"{r.epoch}\t{r.train_loss:.6f}\t{bleu}\t{r.lr:.3e}\t{r.steps}\t{r.wall_time:.2f}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class TrainLogStore:
    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def reset(self) -> None:
        if self.path.exists():
            self.path.unlink()

    def append(self, record: EpochRecord) -> None:
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(asdict(record)) + "\n")

    def read_all(self) -> List[EpochRecord]:
        if not self.path.exists():
            return []
        records: List[EpochRecord] = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            records.append(EpochRecord(**json.loads(line)))
        return records
