"""Result tables and feature-space scatter exports.

Each table cell aggregates one error rate over repeated runs as
"mean (±std)" in percent with two decimals, sample standard deviation
(ddof=1).  Cells whose runs all agree print the bare value ("0" when
integral) with no ± suffix, matching the single-run convention.  PCA
projections of stored feature vectors to two components are exported as
labeled CSV for scatter plotting.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import FAKE_LABELS
from .supervised import Metrics

__all__ = [
    "Table",
    "format_cell",
    "build_metrics_table",
    "write_table_csv",
    "write_table_markdown",
    "pca_project",
    "write_scatter_csv",
    "run_report",
]

TABLE_COLUMNS = ("setup", "p_miss") + tuple(f"p_fa_{label.value}" for label in FAKE_LABELS)


@dataclass(frozen=True)
class Table:
    """Rectangular table of already-formatted cells."""

    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(
                    f"row width {len(row)} does not match header width {len(self.header)}"
                )


def format_cell(values_percent: Sequence[float]) -> str:
    """Aggregate per-run percentages into one table cell.

    A missing rate (no trials in any run) renders as "-".
    """
    values = [float(v) for v in values_percent if v is not None]
    if not values:
        return "-"
    mean = sum(values) / len(values)
    std = 0.0
    if len(values) > 1:
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))
    if std == 0.0:
        return str(int(mean)) if mean == int(mean) else f"{mean:.2f}"
    return f"{mean:.2f} (±{std:.2f})"


def build_metrics_table(rows: Sequence[tuple[str, Sequence[Metrics]]]) -> Table:
    """One table row per named setup, aggregating that setup's runs."""
    if not rows:
        raise ValueError("report needs at least one completed run")
    out = []
    for name, metrics in rows:
        if not metrics:
            raise ValueError(f"setup {name!r} has no completed runs")
        miss = [None if m.p_miss is None else 100.0 * m.p_miss for m in metrics]
        cells = [name, format_cell(miss)]
        for label in FAKE_LABELS:
            rates = [
                None if m.p_fa(label) is None else 100.0 * m.p_fa(label) for m in metrics
            ]
            cells.append(format_cell(rates))
        out.append(tuple(cells))
    return Table(TABLE_COLUMNS, tuple(out))


def write_table_csv(table: Table, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.header)
        writer.writerows(table.rows)


def write_table_markdown(table: Table, path: str | Path) -> None:
    lines = [
        "| " + " | ".join(table.header) + " |",
        "| " + " | ".join("---" for _ in table.header) + " |",
    ]
    for row in table.rows:
        lines.append("| " + " | ".join(row) + " |")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# PCA scatter export
# ---------------------------------------------------------------------------

def pca_project(features: np.ndarray) -> np.ndarray:
    """Project feature rows onto their top two principal components.

    Components are sign-fixed (largest-magnitude loading positive) so the
    projection is deterministic across runs and platforms.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError(f"need (n, d>=2) features, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("features contain non-finite values")
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for i in range(2):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0.0:
            components[i] = -components[i]
    return centered @ components.T


def write_scatter_csv(
    path: str | Path, features: np.ndarray, labels: Sequence[str]
) -> None:
    """N rows of (pc1, pc2, label)."""
    projected = pca_project(features)
    if len(labels) != len(projected):
        raise ValueError(f"{len(labels)} labels for {len(projected)} feature rows")
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("pc1", "pc2", "label"))
        for (pc1, pc2), label in zip(projected, labels):
            writer.writerow((f"{pc1:.10g}", f"{pc2:.10g}", str(label)))


def run_report(
    rows: Sequence[tuple[str, Sequence[Metrics]]],
    out_dir: str | Path,
    stem: str = "table",
    features: np.ndarray | None = None,
    feature_labels: Sequence[str] | None = None,
) -> dict[str, Path]:
    """Write CSV + markdown tables (and optional PCA scatter); return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = build_metrics_table(rows)
    paths = {"csv": out / f"{stem}.csv", "markdown": out / f"{stem}.md"}
    write_table_csv(table, paths["csv"])
    write_table_markdown(table, paths["markdown"])
    if features is not None:
        if feature_labels is None:
            raise ValueError("feature scatter needs labels")
        paths["scatter"] = out / f"{stem}_scatter.csv"
        write_scatter_csv(paths["scatter"], features, feature_labels)
    return paths
