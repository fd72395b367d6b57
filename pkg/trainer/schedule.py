"""Plateau learning-rate decay driven by validation BLEU."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from numcore.errors import ContractError, ParameterError


@dataclass
class PlateauSchedule:
    """Halve the rate when BLEU has not improved for `first_patience` epochs,
    then for `patience` epochs after each decay.

    An improvement is a strictly higher BLEU than the best so far (initially
    0.0, the floor of the metric). The stale counter resets on every
    improvement and on every decay.
    """

    lr: float
    decay: float = 0.5
    first_patience: int = 10
    patience: int = 5
    best: float = 0.0
    best_epoch: Optional[int] = None
    stale: int = 0
    decays: int = 0
    epoch: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.decay < 1.0:
            raise ParameterError(f"decay factor must be in (0, 1), got {self.decay}")
        if self.first_patience < 1 or self.patience < 1:
            raise ParameterError("patience values must be positive")

    @property
    def current_patience(self) -> int:
        return self.first_patience if self.decays == 0 else self.patience

    def observe(self, bleu: float) -> bool:
        """Record one epoch's validation BLEU; True when this epoch decayed the rate."""
        self.epoch += 1
        if bleu > self.best:
            self.best = bleu
            self.best_epoch = self.epoch
            self.stale = 0
            return False
        self.stale += 1
        if self.stale >= self.current_patience:
            self.lr *= self.decay
            self.decays += 1
            self.stale = 0
            return True
        return False


def schedule_update(
    history: Sequence[float],
    lr: float,
    decay: float = 0.5,
    first_patience: int = 10,
    patience: int = 5,
) -> float:
    """Learning rate to use after the last epoch in `history`, given the current one."""
    if not history:
        raise ContractError("schedule_update needs at least one validation score")
    replay = PlateauSchedule(lr=1.0, decay=decay, first_patience=first_patience, patience=patience)
    decayed = False
    for bleu in history:
        decayed = replay.observe(bleu)
    return lr * decay if decayed else lr
