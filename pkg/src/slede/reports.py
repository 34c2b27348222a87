"""Aligned-text renderings of the agreement, metrics, feature, and ablation tables."""

from __future__ import annotations

from collections import Counter
from typing import Mapping, Sequence

from .agreement import ROW_LABELS, ROW_TOKEN, ROW_UTTERANCE, AgreementReport
from .analysis import AblationTable, ImportanceReport
from .models import MetricsReport

KIND_TITLES = {"lr": "Logistic Regression", "rf": "Random Forest", "nb": "Naive Bayes"}
METRIC_ORDER = ("ACC", "PRE", "REC", "F1")


def _fmt(value: float | None, digits: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def _grid(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def agreement_table(report: AgreementReport) -> str:
    rows = [
        ["Measure", "Token-level Features", "Utterance-level Features", "Dialogue-level Labels"],
        ["alpha"] + [_fmt(report.rows[r]["alpha"], 2) for r in (ROW_TOKEN, ROW_UTTERANCE, ROW_LABELS)],
        ["r"] + [_fmt(report.rows[r]["pearson_r"], 2) for r in (ROW_TOKEN, ROW_UTTERANCE, ROW_LABELS)],
    ]
    body = _grid(rows)
    notes = ", ".join(f"{k}={v}" for k, v in sorted(report.coverage.items()) if v)
    if notes:
        body += f"coverage: {notes}\n"
    return body


def metrics_table(reports: Sequence[MetricsReport], label_ids: Sequence[str]) -> str:
    entries: dict[tuple[str, str], Mapping[str, float]] = {}
    for r in reports:
        entries.update(r.entries)
    kinds = sorted({kind for _, kind in entries})
    blocks = []
    for kind in kinds:
        rows = [["Labels", *[lid.capitalize() for lid in label_ids]]]
        for metric in METRIC_ORDER:
            rows.append(
                [metric]
                + [_fmt(entries.get((lid, kind), {}).get(metric)) for lid in label_ids]
            )
        blocks.append(f"[{KIND_TITLES.get(kind, kind)}]\n" + _grid(rows))
    return "\n".join(blocks)


def common_features_table(report: ImportanceReport, names: Mapping[str, str] | None = None) -> str:
    """Common high-impact features per classifier; overlap reported as counts."""
    names = names or {}
    kinds = sorted(report.common)
    count_in_kinds = Counter(
        fid for kind in kinds for fid in report.common[kind].feature_ids
    )
    depth = max((len(report.common[k].feature_ids) for k in kinds), default=0)
    rows = [[KIND_TITLES.get(k, k) for k in kinds]]
    for i in range(depth):
        row = []
        for kind in kinds:
            ids = report.common[kind].feature_ids
            if i < len(ids):
                fid = ids[i]
                row.append(f"{names.get(fid, fid)} (x{count_in_kinds[fid]})")
            else:
                row.append("")
        rows.append(row)
    return _grid(rows)


def specific_features_table(
    report: ImportanceReport, label_ids: Sequence[str], names: Mapping[str, str] | None = None
) -> str:
    names = names or {}
    kinds = sorted({kind for _, kind in report.specific})
    blocks = []
    for kind in kinds:
        per_label = {lid: report.specific[(lid, kind)].feature_ids for lid in label_ids}
        overlap = Counter(fid for ids in per_label.values() for fid in ids)
        depth = max((len(v) for v in per_label.values()), default=0)
        rows = [[lid.capitalize() for lid in label_ids]]
        for i in range(depth):
            row = []
            for lid in label_ids:
                ids = per_label[lid]
                row.append(
                    f"{names.get(ids[i], ids[i])} (x{overlap[ids[i]]})" if i < len(ids) else ""
                )
            rows.append(row)
        blocks.append(f"[{KIND_TITLES.get(kind, kind)}]\n" + _grid(rows))
    return "\n".join(blocks)


def ablation_table(table: AblationTable, label_ids: Sequence[str]) -> str:
    kinds = sorted({kind for kind, _, _ in table.cells})
    blocks = []
    for lid in label_ids:
        rows = [["Models", "Token", "Utt.", "Both"]]
        for kind in kinds:
            rows.append(
                [kind.upper()]
                + [
                    _fmt(table.cells[(kind, lid, flt)])
                    for flt in ("token_only", "utterance_only", "both")
                ]
            )
        blocks.append(f"[{lid.capitalize()}]\n" + _grid(rows))
    return "\n".join(blocks)
