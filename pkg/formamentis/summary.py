"""Report tables: empirical vs. null comparisons and the run summary."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .errors import MetricMismatch, ValidationError
from .export import read_json

logger = logging.getLogger(__name__)

MetricRow = Dict[str, Optional[float]]

# Metric display order; anything else follows alphabetically.
METRIC_ORDER = ("aspl", "diameter", "mean_cc", "modularity")
METRIC_TITLES = {
    "aspl": "ASPL",
    "diameter": "Diameter",
    "mean_cc": "CC",
    "modularity": "Modularity",
}


def _ordered(names) -> List[str]:
    known = [m for m in METRIC_ORDER if m in names]
    return known + sorted(n for n in names if n not in METRIC_ORDER)


def _fmt(value: Optional[float], digits: int = 3) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def _fmt_p(value: Optional[float]) -> str:
    if value is None:
        return "-"
    if value < 0.001:
        return "<.001"
    return f"{value:.3f}"


# ---------------------------
# Loading reports
# ---------------------------

def normalize_report(data: Any, name: str = "report") -> Dict[str, MetricRow]:
    """metric -> {empirical, ensemble_mean, p_value}.

    Accepts a null-test document (metric -> report mapping) or a metrics
    document (metric -> number); the latter has no ensemble columns.
    """
    if not isinstance(data, Mapping):
        raise ValidationError(f"{name}: expected a JSON object", report=name)
    rows: Dict[str, MetricRow] = {}
    for metric, value in data.items():
        if isinstance(value, Mapping) and "empirical" in value:
            rows[metric] = {
                "empirical": float(value["empirical"]),
                "ensemble_mean": float(value["ensemble_mean"]) if value.get("ensemble_mean") is not None else None,
                "p_value": float(value["p_value"]) if value.get("p_value") is not None else None,
            }
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            rows[metric] = {"empirical": float(value), "ensemble_mean": None, "p_value": None}
    if not rows:
        raise ValidationError(f"{name}: no metric values found", report=name)
    return rows


def load_report(path: Path) -> Dict[str, MetricRow]:
    return normalize_report(read_json(path), name=str(path))


# ---------------------------
# Comparison
# ---------------------------

def compare_reports(
    a: Mapping[str, MetricRow],
    b: Mapping[str, MetricRow],
    label_a: str = "a",
    label_b: str = "b",
) -> Dict[str, Any]:
    """Side-by-side rows over the metrics both reports share.

    ``difference`` is b's empirical value minus a's.
    """
    shared = set(a) & set(b)
    if not shared:
        raise MetricMismatch(
            "reports share no metric",
            metrics_a=sorted(a),
            metrics_b=sorted(b),
        )
    unmatched = sorted(set(a) ^ set(b))
    if unmatched:
        logger.warning("Metrics present in only one report are skipped: %s", ", ".join(unmatched))

    rows = []
    for metric in _ordered(shared):
        left, right = a[metric], b[metric]
        rows.append(
            {
                "metric": metric,
                label_a: dict(left),
                label_b: dict(right),
                "difference": right["empirical"] - left["empirical"],
            }
        )
    return {"labels": [label_a, label_b], "rows": rows}


def render_comparison(comparison: Mapping[str, Any]) -> str:
    """Plain-text table: per side empirical, random mean and p; then the difference."""
    label_a, label_b = comparison["labels"]
    header = ["Metric"]
    for label in (label_a, label_b):
        header += [f"{label} empirical", f"{label} random", f"{label} p"]
    header.append("difference")

    table = [header]
    for row in comparison["rows"]:
        cells = [METRIC_TITLES.get(row["metric"], row["metric"])]
        for label in (label_a, label_b):
            side = row[label]
            cells += [_fmt(side["empirical"]), _fmt(side["ensemble_mean"]), _fmt_p(side["p_value"])]
        cells.append(_fmt(row["difference"]))
        table.append(cells)

    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip() for r in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# ---------------------------
# Run summary
# ---------------------------

def _cell_name(cell: Mapping[str, Any]) -> str:
    return f"{cell['source'].capitalize()} {cell['group'].capitalize()}"


def render_run_summary(cells: Sequence[Mapping[str, Any]], manifest: Mapping[str, Any]) -> str:
    """Markdown summary of a pipeline run.

    Each cell mapping carries ``source``, ``group``, ``counts``, ``metrics``
    (metric -> value) and ``nulltests`` (metric -> report dict).
    """
    metric_names = _ordered({m for cell in cells for m in cell.get("nulltests", {})})

    lines = [
        "# Forma Mentis Run Summary",
        "",
        "## Overview",
        f"- **Version**: {manifest.get('version', '-')}",
        f"- **Cells**: {len(cells)}",
        f"- **Null replicates**: {manifest.get('config', {}).get('null', {}).get('n_samples', '-')}",
        f"- **Seed**: {manifest.get('config', {}).get('null', {}).get('seed', '-')}",
        "",
        "## Participants",
        "",
        "| Cell | Parsed | Excluded | Kept | Nodes | Edges | Cues |",
        "|---|---|---|---|---|---|---|",
    ]
    for cell in cells:
        c = cell["counts"]
        lines.append(
            f"| {_cell_name(cell)} | {c['parsed']} | {c['excluded']} | {c['kept']} "
            f"| {c['nodes']} | {c['edges']} | {c['cues']} |"
        )

    if metric_names:
        header = "| Cell | " + " | ".join(
            f"{METRIC_TITLES.get(m, m)} empirical | {METRIC_TITLES.get(m, m)} random | p" for m in metric_names
        ) + " |"
        lines += ["", "## Empirical vs. random networks", "", header, "|---" * (1 + 3 * len(metric_names)) + "|"]
        for cell in cells:
            tests = cell.get("nulltests", {})
            parts = []
            for m in metric_names:
                report = tests.get(m)
                if report is None:
                    parts += ["-", "-", "-"]
                else:
                    parts += [_fmt(report["empirical"]), _fmt(report["ensemble_mean"]), _fmt_p(report["p_value"])]
            lines.append(f"| {_cell_name(cell)} | " + " | ".join(parts) + " |")

    groups = sorted({cell["group"] for cell in cells})
    sources = sorted({cell["source"] for cell in cells})
    cc = {(cell["source"], cell["group"]): cell["metrics"].get("mean_cc") for cell in cells}
    lines += [
        "",
        "## Mean clustering by group",
        "",
        "| Group | " + " | ".join(s.capitalize() for s in sources) + " |",
        "|---" * (1 + len(sources)) + "|",
    ]
    for group in groups:
        lines.append(f"| {group.capitalize()} | " + " | ".join(_fmt(cc.get((s, group))) for s in sources) + " |")

    lines += ["", "---", "*Generated by formamentis*", ""]
    return "\n".join(lines)
