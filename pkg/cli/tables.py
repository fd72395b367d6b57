"""Results tables: TSV/JSON files and rich console rendering."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.table import Table

from evalmetrics.report import ScoreReport

from .manifest import SYSTEMS, MetricsRow, size_label
from .trends import TrendReport, TrendStatus

RESULT_COLUMNS = (
    "system",
    "size",
    "tier",
    "seed",
    "dev_bleu",
    "test_bleu",
    "delta_dev",
    "delta_test",
    "stage1_metric",
    "stage1_dev",
    "stage1_test",
    "train_steps",
    "epochs_to_best",
    "degenerate",
    "hit_max_len",
)

console = Console()


def _baseline_index(rows: Sequence[MetricsRow], baseline: str) -> Dict[Tuple[float, str, int], MetricsRow]:
    return {(r.size, r.tier, r.seed): r for r in rows if r.system == baseline}


def _baseline_for(
    row: MetricsRow,
    index: Dict[Tuple[float, str, int], MetricsRow],
    baseline: str,
) -> Optional[MetricsRow]:
    if not SYSTEMS[baseline].uses_tier:
        return next((r for (size, _, seed), r in index.items() if size == row.size and seed == row.seed), None)
    return index.get((row.size, row.tier, row.seed))


def with_deltas(rows: Sequence[MetricsRow], baseline: str) -> List[dict]:
    """Row dicts plus BLEU differences to the baseline system in the same (size, tier, seed) slot."""
    index = _baseline_index(rows, baseline)
    records = []
    for row in rows:
        record = row.to_dict()
        base = _baseline_for(row, index, baseline)
        record["delta_dev"] = None if base is None else row.dev_bleu - base.dev_bleu
        record["delta_test"] = None if base is None else row.test_bleu - base.test_bleu
        records.append(record)
    return records


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def write_results(rows: Sequence[MetricsRow], baseline: str, out_dir: Path) -> List[dict]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = with_deltas(rows, baseline)
    lines = ["\t".join(RESULT_COLUMNS)]
    for record in records:
        lines.append("\t".join(f"{record[c]:g}" if c == "size" else _cell(record[c]) for c in RESULT_COLUMNS))
    (out_dir / "results.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    payload = {"baseline": baseline, "columns": list(RESULT_COLUMNS), "rows": records}
    (out_dir / "results.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return records


def read_results(path: Path) -> List[MetricsRow]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    fields = set(MetricsRow.__dataclass_fields__)
    return [MetricsRow.from_dict({k: v for k, v in r.items() if k in fields}) for r in data["rows"]]


def results_table(records: Sequence[dict], title: str = "Results") -> Table:
    table = Table(title=title)
    for column in ("system", "size", "tier", "seed", "dev", "test", "Δ dev", "Δ test", "stage 1", "epochs"):
        table.add_column(column, justify="left" if column in ("system", "tier") else "right")
    for r in records:
        stage1 = "" if r["stage1_metric"] is None else f"{r['stage1_metric']} {_cell(r['stage1_test'])}"
        table.add_row(
            r["system"],
            size_label(r["size"]),
            r["tier"],
            str(r["seed"]),
            _cell(r["dev_bleu"]),
            _cell(r["test_bleu"]),
            _signed(r["delta_dev"]),
            _signed(r["delta_test"]),
            stage1,
            str(r["epochs_to_best"]),
        )
    return table


def _signed(value: Optional[float]) -> str:
    return "" if value is None else f"{value:+.2f}"


def trend_table(report: TrendReport) -> Table:
    table = Table(title="Trend assertions")
    table.add_column("trend")
    table.add_column("status")
    table.add_column("margin", justify="right")
    table.add_column("detail")
    styles = {TrendStatus.PASS: "green", TrendStatus.FAIL: "red", TrendStatus.UNEVALUABLE: "yellow"}
    for r in report.results:
        table.add_row(r.name, f"[{styles[r.status]}]{r.status.value}[/]", _signed(r.margin), r.detail)
    return table


def score_table(reports: Sequence[ScoreReport]) -> Table:
    table = Table(title="Scores")
    table.add_column("metric")
    table.add_column("value", justify="right")
    table.add_column("details")
    for report in reports:
        table.add_row(report.metric, f"{report.value:.2f}", report.format())
    return table
