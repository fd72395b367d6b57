from .manifest import (
    DEFAULT_TRENDS,
    SYSTEMS,
    Cell,
    CorpusSpec,
    ExperimentManifest,
    MetricsRow,
    ModelJob,
    SystemName,
    TrendKind,
    TrendSpec,
)
from .trends import TrendReport, TrendResult, TrendStatus, assert_trends
from .runner import CellLogStore, ExperimentResult, run_experiment

__all__ = [
    "DEFAULT_TRENDS",
    "SYSTEMS",
    "Cell",
    "CorpusSpec",
    "ExperimentManifest",
    "MetricsRow",
    "ModelJob",
    "SystemName",
    "TrendKind",
    "TrendSpec",
    "TrendReport",
    "TrendResult",
    "TrendStatus",
    "assert_trends",
    "CellLogStore",
    "ExperimentResult",
    "run_experiment",
]
