"""Experiment manifests, grid cells and metrics rows."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from phonesup.quality import TIER_ORDER, TierName
from stmodel.variants import VariantTag
from synthcorpus.config import SynthConfig
from trainer.config import RunConfig

NO_TIER = "n/a"


class SystemName(str, Enum):
    BASELINE_E2E = "baseline_e2e"
    PHONE_E2E = "phone_e2e"
    PHONE_AVG_E2E = "phone_avg_e2e"
    BASELINE_CASCADE = "baseline_cascade"
    PHONE_CASCADE = "phone_cascade"
    PHONE_CASCADE_UNCOLLAPSED = "phone_cascade_uncollapsed"
    HYBRID_CASCADE = "hybrid_cascade"


@dataclass(frozen=True)
class StageSpec:
    """One trained model a system needs. ``variant`` None means the aligner output."""

    variant: Optional[VariantTag]
    collapse_phones: bool = True

    @property
    def is_alignment(self) -> bool:
        return self.variant is None

    @property
    def uses_tier(self) -> bool:
        return self.variant is None or self.variant in TIER_VARIANTS


@dataclass(frozen=True)
class SystemSpec:
    name: SystemName
    stages: Tuple[StageSpec, ...]

    @property
    def is_cascade(self) -> bool:
        return len(self.stages) == 2

    @property
    def uses_tier(self) -> bool:
        return any(stage.uses_tier for stage in self.stages)

    @property
    def trained_stages(self) -> List[StageSpec]:
        return [stage for stage in self.stages if not stage.is_alignment]


TIER_VARIANTS = {
    VariantTag.PHONE_E2E,
    VariantTag.PHONE_AVG_E2E,
    VariantTag.MT_OVER_PHONES,
    VariantTag.ASR_PHONE_AVG,
}

SYSTEMS: Dict[SystemName, SystemSpec] = {
    SystemName.BASELINE_E2E: SystemSpec(SystemName.BASELINE_E2E, (StageSpec(VariantTag.BASELINE_E2E),)),
    SystemName.PHONE_E2E: SystemSpec(SystemName.PHONE_E2E, (StageSpec(VariantTag.PHONE_E2E),)),
    SystemName.PHONE_AVG_E2E: SystemSpec(SystemName.PHONE_AVG_E2E, (StageSpec(VariantTag.PHONE_AVG_E2E),)),
    SystemName.BASELINE_CASCADE: SystemSpec(
        SystemName.BASELINE_CASCADE, (StageSpec(VariantTag.ASR_BPE), StageSpec(VariantTag.MT_OVER_TEXT))
    ),
    SystemName.PHONE_CASCADE: SystemSpec(
        SystemName.PHONE_CASCADE, (StageSpec(None), StageSpec(VariantTag.MT_OVER_PHONES))
    ),
    SystemName.PHONE_CASCADE_UNCOLLAPSED: SystemSpec(
        SystemName.PHONE_CASCADE_UNCOLLAPSED,
        (StageSpec(None, collapse_phones=False), StageSpec(VariantTag.MT_OVER_PHONES, collapse_phones=False)),
    ),
    SystemName.HYBRID_CASCADE: SystemSpec(
        SystemName.HYBRID_CASCADE, (StageSpec(VariantTag.ASR_PHONE_AVG), StageSpec(VariantTag.MT_OVER_TEXT))
    ),
}


def size_label(size: float) -> str:
    """``0.25`` -> ``25pct``; ``500`` -> ``n500``."""
    if size <= 1.0:
        return f"{size * 100:g}pct"
    return f"n{int(size)}"


class CorpusSpec(BaseModel):
    synth: Optional[SynthConfig] = Field(default=None, description="Generate a synthetic corpus with these settings")
    corpus_dir: Optional[str] = Field(default=None, description="Use an existing corpus directory")

    @model_validator(mode="after")
    def _one_source(self) -> "CorpusSpec":
        if (self.synth is None) == (self.corpus_dir is None):
            raise ValueError("corpus needs exactly one of synth or corpus_dir")
        return self


class TrendKind(str, Enum):
    BETTER_THAN = "better_than"
    TIER_MONOTONE = "tier_monotone"


class TrendSpec(BaseModel):
    name: str
    kind: TrendKind
    system: SystemName
    other: Optional[SystemName] = None
    tier: TierName = TierName.GOLD
    metric: str = Field(default="test_bleu", pattern="^(dev|test)_bleu$")
    min_margin: float = Field(default=0.0, description="Required margin on seed-mean BLEU")
    strict: bool = True
    widening: bool = Field(default=False, description="Gap at the smallest size must be the largest gap over all sizes")

    @model_validator(mode="after")
    def _check(self) -> "TrendSpec":
        if self.kind is TrendKind.BETTER_THAN and self.other is None:
            raise ValueError(f"trend {self.name!r}: better_than needs 'other'")
        return self


DEFAULT_TRENDS: List[TrendSpec] = [
    TrendSpec(
        name="phone cascade beats baseline e2e, widening at low resource",
        kind=TrendKind.BETTER_THAN,
        system=SystemName.PHONE_CASCADE,
        other=SystemName.BASELINE_E2E,
        widening=True,
    ),
    TrendSpec(
        name="phone e2e beats baseline e2e",
        kind=TrendKind.BETTER_THAN,
        system=SystemName.PHONE_E2E,
        other=SystemName.BASELINE_E2E,
    ),
    TrendSpec(
        name="phone cascade quality monotonicity",
        kind=TrendKind.TIER_MONOTONE,
        system=SystemName.PHONE_CASCADE,
        strict=False,
    ),
    TrendSpec(
        name="collapsed phones beat frame-level phones, widening at low resource",
        kind=TrendKind.BETTER_THAN,
        system=SystemName.PHONE_CASCADE,
        other=SystemName.PHONE_CASCADE_UNCOLLAPSED,
        strict=False,
        widening=True,
    ),
]


@dataclass(frozen=True)
class Cell:
    system: SystemName
    size: float
    tier: str
    seed: int

    @property
    def key(self) -> str:
        return f"{self.system.value}__{size_label(self.size)}__{self.tier}__s{self.seed}"

    @property
    def spec(self) -> SystemSpec:
        return SYSTEMS[self.system]


@dataclass(frozen=True)
class ModelJob:
    """One stage model, shared by every cell that needs it."""

    variant: VariantTag
    size: float
    tier: str
    seed: int
    collapse_phones: bool = True

    @property
    def key(self) -> str:
        collapse = "" if self.collapse_phones else "__frames"
        return f"{self.variant.value}__{size_label(self.size)}__{self.tier}__s{self.seed}{collapse}"

    @classmethod
    def for_stage(cls, stage: StageSpec, cell: Cell) -> "ModelJob":
        tier = cell.tier if stage.uses_tier else NO_TIER
        # Only the phone-token MT model reads the collapse switch.
        collapse = stage.collapse_phones if stage.variant is VariantTag.MT_OVER_PHONES else True
        return cls(stage.variant, cell.size, tier, cell.seed, collapse)


class ExperimentManifest(BaseModel):
    schema_version: int = 1
    name: str = "experiment"
    output_dir: str = "experiments/desk"
    corpus: CorpusSpec
    systems: List[SystemName] = Field(min_length=1)
    sizes: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    tiers: List[TierName] = Field(default_factory=lambda: [TierName.GOLD], min_length=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    baseline: Optional[SystemName] = Field(default=None, description="System the delta column is relative to")
    run: Dict[str, Any] = Field(default_factory=dict, description="RunConfig overrides applied to every model")
    stage_beams: Tuple[int, int] = (15, 15)
    workers: int = Field(default=1, ge=1)
    trends: Optional[List[TrendSpec]] = None

    @model_validator(mode="after")
    def _check(self) -> "ExperimentManifest":
        fractions = [s <= 1.0 for s in self.sizes]
        if any(s <= 0 for s in self.sizes):
            raise ValueError("sizes must be positive")
        if any(fractions) and not all(fractions):
            raise ValueError("sizes must be all fractions (<= 1) or all utterance counts (> 1)")
        if not all(fractions) and any(s != int(s) for s in self.sizes):
            raise ValueError("utterance-count sizes must be whole numbers")
        if len(set(self.sizes)) != len(self.sizes):
            raise ValueError("sizes contain duplicates")
        if self.baseline is not None and self.baseline not in self.systems:
            raise ValueError(f"baseline {self.baseline.value} is not one of the systems")
        if any(b < 1 for b in self.stage_beams):
            raise ValueError("stage beams must be positive")
        blocked = {"variant", "tier", "seed", "train_fraction", "train_size", "corpus_dir", "output_dir"}
        clash = blocked & set(self.run)
        if clash:
            raise ValueError(f"run overrides may not set grid-controlled fields: {sorted(clash)}")
        RunConfig.model_validate(self.run)
        return self

    @property
    def baseline_system(self) -> SystemName:
        if self.baseline is not None:
            return self.baseline
        if SystemName.BASELINE_CASCADE in self.systems:
            return SystemName.BASELINE_CASCADE
        return self.systems[0]

    @property
    def trend_specs(self) -> List[TrendSpec]:
        return DEFAULT_TRENDS if self.trends is None else self.trends

    def cells(self) -> List[Cell]:
        """Grid cells in a fixed order; tier-independent systems appear once per (size, seed)."""
        tiers = sorted(set(self.tiers), key=TIER_ORDER.index)
        cells: List[Cell] = []
        for system in self.systems:
            uses_tier = SYSTEMS[system].uses_tier
            for size in self.sizes:
                for tier in tiers if uses_tier else [None]:
                    for seed in self.seeds:
                        cells.append(Cell(system, size, tier.value if tier is not None else NO_TIER, seed))
        return cells

    def run_config(self, job: ModelJob, corpus_dir: str, output_dir: str) -> RunConfig:
        data = dict(self.run)
        data.update(
            variant=job.variant,
            tier=TierName.GOLD if job.tier == NO_TIER else TierName(job.tier),
            seed=job.seed,
            corpus_dir=corpus_dir,
            output_dir=output_dir,
            collapse_phones=job.collapse_phones,
        )
        if job.size <= 1.0:
            data["train_fraction"] = None if job.size == 1.0 else job.size
        else:
            data["train_size"] = int(job.size)
        return RunConfig.model_validate(data)


@dataclass
class MetricsRow:
    system: str
    size: float
    tier: str
    seed: int
    dev_bleu: float
    test_bleu: float
    stage1_metric: Optional[str] = None
    stage1_dev: Optional[float] = None
    stage1_test: Optional[float] = None
    train_steps: int = 0
    epochs_to_best: int = 0
    degenerate: int = 0
    hit_max_len: int = 0

    @property
    def size_label(self) -> str:
        return size_label(self.size)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsRow":
        return cls(**data)
