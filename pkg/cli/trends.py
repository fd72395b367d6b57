"""Ordering predicates over seed-mean BLEU."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from phonesup.quality import TIER_ORDER

from .manifest import SYSTEMS, NO_TIER, MetricsRow, TrendKind, TrendSpec, size_label

logger = logging.getLogger(__name__)


class TrendStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    UNEVALUABLE = "unevaluable"


@dataclass
class TrendResult:
    name: str
    status: TrendStatus
    margin: Optional[float] = None
    detail: str = ""
    gaps: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["status"] = self.status.value
        return data


@dataclass
class TrendReport:
    results: List[TrendResult]

    @property
    def passed(self) -> bool:
        """True when every evaluable trend passes."""
        return all(r.status is not TrendStatus.FAIL for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2

    def counts(self) -> Dict[str, int]:
        counts = {status.value: 0 for status in TrendStatus}
        for r in self.results:
            counts[r.status.value] += 1
        return counts

    def to_dict(self) -> dict:
        return {"passed": self.passed, "counts": self.counts(), "trends": [r.to_dict() for r in self.results]}

    def write(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


Key = Tuple[str, float, str]


def seed_means(rows: Sequence[MetricsRow], metric: str) -> Dict[Key, float]:
    """Mean of ``metric`` over seeds per (system, size, tier)."""
    values: Dict[Key, List[float]] = defaultdict(list)
    for row in rows:
        values[(row.system, row.size, row.tier)].append(float(getattr(row, metric)))
    return {key: sum(v) / len(v) for key, v in values.items()}


def _tier_for(system: str, tier: str) -> str:
    return tier if SYSTEMS[system].uses_tier else NO_TIER


def _passes(margin: float, spec: TrendSpec) -> bool:
    return margin > spec.min_margin if spec.strict else margin >= spec.min_margin


def _better_than(spec: TrendSpec, means: Dict[Key, float], sizes: List[float]) -> TrendResult:
    system, other = spec.system.value, spec.other.value
    gaps: Dict[float, float] = {}
    missing = []
    for size in sizes:
        a = means.get((system, size, _tier_for(system, spec.tier.value)))
        b = means.get((other, size, _tier_for(other, spec.tier.value)))
        if a is None or b is None:
            missing.append(size_label(size))
            continue
        gaps[size] = a - b
    if missing:
        return TrendResult(spec.name, TrendStatus.UNEVALUABLE, detail=f"missing cells at sizes {missing}")
    margin = min(gaps.values())
    ok = _passes(margin, spec)
    detail = f"{system} - {other} at every size"
    if spec.widening and len(sizes) > 1:
        small = gaps[sizes[0]]
        widest = max(gaps, key=lambda s: gaps[s])
        ok = ok and small >= gaps[widest]
        detail += f"; gap {small:+.2f} at {size_label(sizes[0])}, widest {gaps[widest]:+.2f} at {size_label(widest)}"
    status = TrendStatus.PASS if ok else TrendStatus.FAIL
    return TrendResult(spec.name, status, margin, detail, {size_label(s): g for s, g in gaps.items()})


def _tier_monotone(spec: TrendSpec, means: Dict[Key, float], sizes: List[float]) -> TrendResult:
    system = spec.system.value
    if not SYSTEMS[spec.system].uses_tier:
        return TrendResult(spec.name, TrendStatus.UNEVALUABLE, detail=f"{system} does not depend on the tier")
    gaps: Dict[str, float] = {}
    for size in sizes:
        scores = [means.get((system, size, tier.value)) for tier in TIER_ORDER]
        if any(score is None for score in scores):
            return TrendResult(spec.name, TrendStatus.UNEVALUABLE, detail=f"missing tiers at {size_label(size)}")
        for tier_a, tier_b, a, b in zip(TIER_ORDER, TIER_ORDER[1:], scores, scores[1:]):
            gaps[f"{size_label(size)}:{tier_a.value}-{tier_b.value}"] = a - b
    margin = min(gaps.values())
    status = TrendStatus.PASS if _passes(margin, spec) else TrendStatus.FAIL
    detail = " >= ".join(t.value for t in TIER_ORDER) + f" for {system} at every size"
    return TrendResult(spec.name, status, margin, detail, gaps)


def assert_trends(rows: Sequence[MetricsRow], trends: Sequence[TrendSpec]) -> TrendReport:
    """Evaluate each trend on seed-mean scores; absent cells make a trend unevaluable."""
    sizes = sorted({row.size for row in rows})
    results: List[TrendResult] = []
    for spec in trends:
        means = seed_means(rows, spec.metric)
        if not sizes:
            result = TrendResult(spec.name, TrendStatus.UNEVALUABLE, detail="no results")
        elif spec.kind is TrendKind.BETTER_THAN:
            result = _better_than(spec, means, sizes)
        else:
            result = _tier_monotone(spec, means, sizes)
        log = logger.warning if result.status is TrendStatus.FAIL else logger.info
        log("Trend %r: %s (margin %s)", spec.name, result.status.value, _fmt(result.margin))
        results.append(result)
    return TrendReport(results)


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:+.2f}"
