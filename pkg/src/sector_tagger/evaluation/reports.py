"""Human-readable tables: per-sector metric blocks, co-occurrence and timings."""

from __future__ import annotations

import csv
import io
from typing import Mapping, Sequence

import numpy as np

from ..corpus import SECTOR_LABELS, SECTORS

ALGORITHM_LABELS = {"lr": "LR", "rf": "RF", "gbm": "GBM"}
METRIC_LABELS = {"auc": "AUC", "f_score": "F score"}


def order_sectors(sectors) -> list[str]:
    return [s for s in SECTORS if s in set(sectors)]


def _fmt(v: float, digits: int) -> str:
    return "n/a" if v is None or not np.isfinite(v) else f"{v:.{digits}f}"


def metric_block(
    metric: str,
    algorithms: Sequence[str],
    sectors: Sequence[str],
    values: Mapping[tuple[str, str], float],
    flags: Mapping[str, Sequence[bool]] | None = None,
    digits: int = 3,
) -> str:
    """One Markdown table: algorithm rows, sector columns plus the row mean.

    ``flags[column]`` marks the cells to bold in that column, in algorithm
    order; columns without flags bold only their maximum.
    """
    sectors = order_sectors(sectors)
    columns = sectors + ["mean"]
    table = np.full((len(algorithms), len(columns)), np.nan)
    for a, algo in enumerate(algorithms):
        for c, sector in enumerate(sectors):
            table[a, c] = values.get((algo, sector), np.nan)
        row = table[a, : len(sectors)]
        table[a, -1] = row.mean() if np.all(np.isfinite(row)) else np.nan
    bold = np.zeros_like(table, dtype=bool)
    for c, col in enumerate(columns):
        if flags and col in flags:
            bold[:, c] = np.asarray(flags[col], dtype=bool)
        else:
            finite = np.isfinite(table[:, c])
            if finite.any():
                # compare rounded values so equal-looking cells are treated alike
                shown = np.round(np.where(finite, table[:, c], -np.inf), digits)
                bold[:, c] = finite & (shown == shown.max())
    header = ["Algorithm"] + [SECTOR_LABELS[s] for s in sectors] + ["Mean"]
    lines = [
        f"**{METRIC_LABELS.get(metric, metric)}**",
        "",
        "| " + " | ".join(header) + " |",
        "|" + "|".join([":---"] + ["---:"] * (len(header) - 1)) + "|",
    ]
    for a, algo in enumerate(algorithms):
        cells = []
        for c in range(len(columns)):
            text = _fmt(table[a, c], digits)
            cells.append(f"**{text}**" if bold[a, c] else text)
        lines.append("| " + " | ".join([ALGORITHM_LABELS.get(algo, algo)] + cells) + " |")
    return "\n".join(lines) + "\n"


def metrics_markdown(
    title: str,
    algorithms: Sequence[str],
    sectors: Sequence[str],
    results: Mapping[tuple[str, str], Mapping[str, float]],
    flags: Mapping[str, Mapping[str, Sequence[bool]]] | None = None,
    note: str | None = None,
) -> str:
    """AUC block followed by F-score block, as in the published result tables."""
    parts = [f"### {title}", ""]
    for metric in ("auc", "f_score"):
        values = {k: v[metric] for k, v in results.items()}
        parts.append(metric_block(metric, algorithms, sectors, values, (flags or {}).get(metric)))
    if note:
        parts.append(note + "\n")
    return "\n".join(parts)


def metrics_csv(results: Mapping[tuple[str, str, str], Mapping[str, float]]) -> str:
    """Long-form rows keyed by (sector, algorithm, feature_mode) in canonical order."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sector", "algorithm", "feature_mode", "auc", "f_score", "false_negatives", "false_positives", "grey_zone"])
    rank = {s: i for i, s in enumerate(SECTORS)}
    for key in sorted(results, key=lambda k: (rank.get(k[0], 99), k[1], k[2])):
        r = results[key]
        w.writerow([*key, repr(r["auc"]), repr(r["f_score"]), r["false_negatives"], r["false_positives"], r["grey_zone"]])
    return out.getvalue()


def timing_markdown(rows: Sequence[Mapping]) -> str:
    """Full versus selected vectorize+train time per sector and algorithm."""
    lines = [
        "| Sector | Algorithm | Full (s) | Selected (s) | Reduction | Selection (s) |",
        "|:---|:---|---:|---:|---:|---:|",
    ]
    for r in rows:
        full, sel = r["full"], r["selected"]
        red = f"{100.0 * (1.0 - sel / full):.1f}%" if full > 0 else "n/a"
        lines.append(
            f"| {SECTOR_LABELS.get(r['sector'], r['sector'])} | {ALGORITHM_LABELS.get(r['algorithm'], r['algorithm'])} "
            f"| {full:.2f} | {sel:.2f} | {red} | {r['selection']:.2f} |"
        )
    return "\n".join(lines) + "\n"
