"""Named parameter tensors and batch-norm buffers of one model."""

from __future__ import annotations

import copy
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import ConsistencyError, ShapeError
from .functional import RunningStats
from .tensor import Tensor


class Parameters:
    """Ordered name -> trainable Tensor map plus non-trainable buffers."""

    def __init__(self) -> None:
        self._tensors: Dict[str, Tensor] = {}
        self.buffers: Dict[str, RunningStats] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise ConsistencyError(f"Parameter registered twice: {name}")
        tensor = Tensor(values, requires_grad=True, name=name)
        self._tensors[name] = tensor
        return tensor

    def add_buffer(self, name: str, stats: RunningStats) -> RunningStats:
        self.buffers[name] = stats
        return stats

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self) -> List[Tuple[str, Tensor]]:
        return list(self._tensors.items())

    def names(self) -> List[str]:
        return list(self._tensors)

    def as_dict(self) -> Dict[str, Tensor]:
        return dict(self._tensors)

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def grads(self) -> Dict[str, Optional[np.ndarray]]:
        return {name: tensor.grad for name, tensor in self._tensors.items()}

    def count(self) -> int:
        return int(sum(t.size for t in self._tensors.values()))

    def values(self) -> Dict[str, np.ndarray]:
        return {name: tensor.values.copy() for name, tensor in self._tensors.items()}

    def load_values(self, values: Dict[str, np.ndarray], buffers: Optional[Dict[str, RunningStats]] = None) -> None:
        missing = set(self._tensors) - set(values)
        extra = set(values) - set(self._tensors)
        if missing or extra:
            raise ConsistencyError(
                f"Checkpoint parameters do not match the model: missing={sorted(missing)} unexpected={sorted(extra)}"
            )
        for name, array in values.items():
            tensor = self._tensors[name]
            array = np.asarray(array, dtype=np.float64)
            if array.shape != tensor.shape:
                raise ShapeError(f"Checkpoint value for {name} has the wrong shape", array.shape, tensor.shape)
            tensor.values = array.copy()
            tensor.grad = None
        for name, stats in (buffers or {}).items():
            self.buffers[name] = RunningStats(mean=stats.mean.copy(), var=stats.var.copy())

    def snapshot(self) -> "Parameters":
        """Frozen deep copy, safe to share read-only across decoding workers."""
        frozen = Parameters()
        for name, tensor in self._tensors.items():
            frozen._tensors[name] = Tensor(tensor.values.copy(), requires_grad=False, name=name)
        frozen.buffers = copy.deepcopy(self.buffers)
        return frozen
