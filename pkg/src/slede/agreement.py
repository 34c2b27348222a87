"""Inter-annotator agreement: token-level binarization, Pearson r, Krippendorff's alpha.

Micro-level features are compared as binary mark/no-mark vectors over word
tokens; dialogue-level labels as 1-5 score vectors. Per-pair, per-feature
cells are aggregated into the three-row report (token-level features,
utterance-level features, dialogue-level labels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

ROW_TOKEN = "token_features"
ROW_UTTERANCE = "utterance_features"
ROW_LABELS = "dialogue_labels"


class UndefinedStatisticError(ArithmeticError):
    """Raised when a coefficient has no defined value (constant data, D_e = 0, ...)."""


# ---------------------------------------------------------------------------
# Binarization
# ---------------------------------------------------------------------------


def binarize(turns, spans, feature_id: str, annotator_id: str) -> np.ndarray:
    """0/1 vector over the concatenated tokens of ``turns``.

    Position t is 1 iff token t lies inside some span with ``feature_id`` by
    ``annotator_id``. Overlapping spans union.
    """
    offsets = []
    total = 0
    for t in turns:
        offsets.append(total)
        total += len(t.tokens)
    out = np.zeros(total, dtype=np.int8)
    for s in spans:
        if s.feature_id != feature_id or s.annotator_id != annotator_id:
            continue
        base = offsets[s.turn_index]
        out[base + s.start : base + s.end] = 1
    return out


def binarize_dialogue(corpus, dialogue_id: str, feature_id: str, annotator_id: str) -> np.ndarray:
    """Corpus-level binarize with feature/annotator existence checks."""
    if feature_id not in corpus.feature_ids():
        raise KeyError(f"unknown feature {feature_id!r}")
    if annotator_id not in corpus.annotator_ids():
        raise KeyError(f"unknown annotator {annotator_id!r}")
    dialogue = corpus.dialogue(dialogue_id)
    return binarize(dialogue.turns, corpus.spans_for(dialogue_id), feature_id, annotator_id)


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; undefined for constant vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedStatisticError("correlation undefined for a constant vector")
    return float(dx @ dy) / (sx * sy)


def _pairable_units(matrix) -> list[list[float]]:
    units = []
    for row in matrix:
        vals = [
            v
            for v in row
            if v is not None and not (isinstance(v, float) and math.isnan(v))
        ]
        if len(vals) >= 2:
            units.append([float(v) for v in vals])
    return units


def krippendorff_alpha(matrix, metric: str = "nominal") -> float:
    """alpha = 1 - D_o/D_e over the coincidence matrix of ``matrix``.

    ``matrix`` is units x raters; missing cells are None or NaN and are
    excluded from pairing. ``metric`` picks the difference function:
    "nominal" (mismatch) or "interval" (squared difference).
    """
    if metric not in ("nominal", "interval"):
        raise ValueError(f"metric must be 'nominal' or 'interval', got {metric!r}")
    units = _pairable_units(matrix)
    n_pairable = sum(len(u) for u in units)
    if n_pairable < 2:
        raise UndefinedStatisticError("fewer than 2 pairable values")

    cats = sorted({v for u in units for v in u})
    index = {c: i for i, c in enumerate(cats)}
    k = len(cats)
    coincidence = np.zeros((k, k))
    for vals in units:
        m = len(vals)
        for i, a in enumerate(vals):
            for j, b in enumerate(vals):
                if i != j:
                    coincidence[index[a], index[b]] += 1.0 / (m - 1)

    totals = coincidence.sum(axis=1)
    n = totals.sum()
    if metric == "nominal":
        delta = 1.0 - np.eye(k)
    else:
        c_arr = np.asarray(cats, dtype=float)
        delta = (c_arr[:, None] - c_arr[None, :]) ** 2

    d_e = float((np.outer(totals, totals) * delta).sum()) / (n * (n - 1))
    if d_e == 0.0:
        raise UndefinedStatisticError("expected disagreement is zero (all values identical)")
    d_o = float((coincidence * delta).sum()) / n
    return 1.0 - d_o / d_e


# ---------------------------------------------------------------------------
# Corpus-level report (three rows x two coefficients)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgreementCell:
    """One (annotator pair, feature-or-label) measurement."""

    row: str
    pair: tuple[str, str]
    item_id: str
    alpha: float | None
    pearson_r: float | None
    n_units: int


@dataclass(frozen=True)
class AgreementReport:
    rows: Mapping[str, Mapping[str, float | None]]
    cells: tuple[AgreementCell, ...]
    coverage: Mapping[str, int]
    label_metric: str = "interval"

    def to_dict(self) -> dict:
        return {
            "rows": {r: dict(v) for r, v in self.rows.items()},
            "cells": [
                {
                    "row": c.row,
                    "pair": list(c.pair),
                    "item_id": c.item_id,
                    "alpha": c.alpha,
                    "pearson_r": c.pearson_r,
                    "n_units": c.n_units,
                }
                for c in self.cells
            ],
            "coverage": dict(self.coverage),
            "label_metric": self.label_metric,
        }


def infer_pairing(corpus) -> dict[tuple[str, str], tuple[str, ...]]:
    """Annotator pairs that share dialogues, mapped to their shared dialogue ids."""
    worked: dict[str, set[str]] = {}
    for s in corpus.span_annotations:
        worked.setdefault(s.annotator_id, set()).add(s.dialogue_id)
    for d_id, scores in corpus.interactivity_scores.items():
        for sc in scores:
            worked.setdefault(sc.annotator_id, set()).add(d_id)
    pairing = {}
    for a, b in combinations(sorted(worked), 2):
        shared = sorted(worked[a] & worked[b])
        if shared:
            pairing[(a, b)] = tuple(shared)
    return pairing


def _feature_cell(corpus, pair, dialogue_ids, feature_id):
    vec_a, vec_b = [], []
    for d_id in dialogue_ids:
        dialogue = corpus.dialogue(d_id)
        spans = corpus.spans_for(d_id)
        vec_a.append(binarize(dialogue.turns, spans, feature_id, pair[0]))
        vec_b.append(binarize(dialogue.turns, spans, feature_id, pair[1]))
    a = np.concatenate(vec_a)
    b = np.concatenate(vec_b)
    if a.sum() == 0 and b.sum() == 0:
        return None, None, 0  # feature untouched by this pair
    alpha = r = None
    try:
        alpha = krippendorff_alpha(np.stack([a, b], axis=1), metric="nominal")
    except UndefinedStatisticError:
        pass
    try:
        r = pearson(a, b)
    except UndefinedStatisticError:
        pass
    return alpha, r, int(a.size)


def _label_cell(corpus, pair, dialogue_ids, label_id, metric):
    scores_a, scores_b = [], []
    for d_id in dialogue_ids:
        by_annotator = {}
        for sc in corpus.scores_for(d_id):
            if sc.label_id == label_id:
                by_annotator[sc.annotator_id] = sc.score
        if pair[0] in by_annotator and pair[1] in by_annotator:
            scores_a.append(by_annotator[pair[0]])
            scores_b.append(by_annotator[pair[1]])
    if not scores_a:
        return None, None, 0
    alpha = r = None
    try:
        alpha = krippendorff_alpha(np.stack([scores_a, scores_b], axis=1), metric=metric)
    except UndefinedStatisticError:
        pass
    if len(scores_a) >= 2:
        try:
            r = pearson(scores_a, scores_b)
        except UndefinedStatisticError:
            pass
    return alpha, r, len(scores_a)


def agreement_report(
    corpus,
    pairing: Mapping[tuple[str, str], Sequence[str]] | None = None,
    label_metric: str = "interval",
) -> AgreementReport:
    """Mean alpha and Pearson r per report row, with the per-cell breakdown.

    (pair, feature) cells where neither annotator marked the feature are
    excluded from the averages and tallied under ``coverage``; cells where a
    coefficient is undefined (constant vector, zero expected disagreement)
    are excluded from that coefficient's mean only.
    """
    if pairing is None:
        pairing = infer_pairing(corpus)
    level_by_feature = {f.id: f.level for f in corpus.registry}
    label_ids = tuple(l.id for l in corpus.labels)

    cells: list[AgreementCell] = []
    coverage = {"excluded_no_marks": 0, "alpha_undefined": 0, "pearson_undefined": 0}

    for pair, dialogue_ids in sorted(pairing.items()):
        for feature_id, level in level_by_feature.items():
            alpha, r, n_units = _feature_cell(corpus, pair, dialogue_ids, feature_id)
            if n_units == 0:
                coverage["excluded_no_marks"] += 1
                continue
            row = ROW_TOKEN if level == "token" else ROW_UTTERANCE
            if alpha is None:
                coverage["alpha_undefined"] += 1
            if r is None:
                coverage["pearson_undefined"] += 1
            cells.append(AgreementCell(row, pair, feature_id, alpha, r, n_units))
        for label_id in label_ids:
            alpha, r, n_units = _label_cell(corpus, pair, dialogue_ids, label_id, label_metric)
            if n_units == 0:
                coverage["excluded_no_marks"] += 1
                continue
            if alpha is None:
                coverage["alpha_undefined"] += 1
            if r is None:
                coverage["pearson_undefined"] += 1
            cells.append(AgreementCell(ROW_LABELS, pair, label_id, alpha, r, n_units))

    rows: dict[str, dict[str, float | None]] = {}
    for row in (ROW_TOKEN, ROW_UTTERANCE, ROW_LABELS):
        row_cells = [c for c in cells if c.row == row]
        alphas = [c.alpha for c in row_cells if c.alpha is not None]
        rs = [c.pearson_r for c in row_cells if c.pearson_r is not None]
        rows[row] = {
            "alpha": float(np.mean(alphas)) if alphas else None,
            "pearson_r": float(np.mean(rs)) if rs else None,
        }
    return AgreementReport(
        rows=rows, cells=tuple(cells), coverage=coverage, label_metric=label_metric
    )
