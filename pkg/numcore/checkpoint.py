"""Versioned JSON checkpoint container.

Floats are written with Python's shortest round-trip repr, so a save/load
cycle reproduces every float64 bit for bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .errors import ParseError
from .functional import RunningStats
from .optim import AdamState
from .params import Parameters

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray]
    buffers: Dict[str, RunningStats] = field(default_factory=dict)
    optimizer: Optional[AdamState] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def capture(
        cls,
        params: Parameters,
        optimizer: Optional[AdamState] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "Checkpoint":
        return cls(
            params=params.values(),
            buffers={k: RunningStats(v.mean.copy(), v.var.copy()) for k, v in params.buffers.items()},
            optimizer=optimizer,
            metadata=dict(metadata or {}),
        )

    def restore(self, params: Parameters) -> None:
        params.load_values(self.params, self.buffers)

    def to_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "metadata": self.metadata,
            "params": {
                name: {"shape": list(array.shape), "values": array.reshape(-1).tolist()}
                for name, array in self.params.items()
            },
            "buffers": {name: stats.to_dict() for name, stats in self.buffers.items()},
            "optimizer": self.optimizer.to_dict() if self.optimizer is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict, path: Optional[str] = None) -> "Checkpoint":
        version = data.get("version")
        if version != CHECKPOINT_VERSION:
            raise ParseError(f"Unsupported checkpoint version: {version!r}", path)
        try:
            params = {
                name: np.asarray(item["values"], dtype=np.float64).reshape(item["shape"])
                for name, item in data["params"].items()
            }
            buffers = {name: RunningStats.from_dict(item) for name, item in data.get("buffers", {}).items()}
            optimizer = AdamState.from_dict(data["optimizer"]) if data.get("optimizer") else None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"Malformed checkpoint: {exc}", path) from exc
        return cls(params=params, buffers=buffers, optimizer=optimizer, metadata=data.get("metadata", {}))


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_text(json.dumps(checkpoint.to_dict()), encoding="utf-8")
    tmp_path.replace(path)
    logger.debug("Wrote checkpoint %s (%d tensors)", path, len(checkpoint.params))


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"Checkpoint is not valid JSON: {exc.msg}", str(path), exc.lineno) from exc
    return Checkpoint.from_dict(data, str(path))
