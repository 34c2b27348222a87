"""Feature-importance extraction and cross-label feature set algebra.

Each trained classifier yields one importance score per registry feature:
LR uses the mean absolute softmax coefficient across classes (standardized
scale), NB a Fisher-style separation (variance of class-conditional means
over mean within-class variance), RF the mean impurity decrease over trees.
Common features are the top-5 by summed importance of the intersection of
the four labels' top-10 lists; label-specific features are a label's top-10
minus the common set, order preserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._rng import substream
from .featurize import DesignMatrix
from .models import (
    ClassifierSpec,
    MetricsReport,
    TrainedModel,
    cross_validate,
    evaluate,
    predict,
    train_arrays,
)

TOP_COMMON = 5
TOP_PER_LABEL = 10


@dataclass(frozen=True)
class WeightedFeatureList:
    """Every registry feature once, ordered by descending importance.

    Ties break by registry order so rankings are reproducible.
    """

    label_id: str
    kind: str
    entries: tuple[tuple[str, float], ...]

    def top(self, k: int) -> tuple[str, ...]:
        return tuple(fid for fid, _ in self.entries[:k])

    def importance_of(self, feature_id: str) -> float:
        for fid, imp in self.entries:
            if fid == feature_id:
                return imp
        raise KeyError(feature_id)


@dataclass(frozen=True)
class CommonFeatureSet:
    kind: str
    feature_ids: tuple[str, ...]  # at most TOP_COMMON
    provenance: Mapping[str, tuple[str, ...]]  # label -> its top-10 ids


@dataclass(frozen=True)
class SpecificFeatureSet:
    label_id: str
    kind: str
    feature_ids: tuple[str, ...]  # top-10 minus the common set, order preserved


def _ranked(
    feature_ids: Sequence[str], raw: np.ndarray, label_id: str, kind: str
) -> WeightedFeatureList:
    # stable sort on negated importance keeps registry order among ties
    order = np.argsort(-np.asarray(raw, dtype=float), kind="stable")
    entries = tuple((feature_ids[i], float(raw[i])) for i in order)
    return WeightedFeatureList(label_id=label_id, kind=kind, entries=entries)


def model_importance(
    model: TrainedModel, label_id: str, registry_ids: Sequence[str]
) -> WeightedFeatureList:
    """Per-feature importance of a model trained on the full registry matrix."""
    if tuple(model.feature_ids) != tuple(registry_ids):
        raise ValueError(
            "importance is defined on the full registry; model was trained on "
            f"{len(model.feature_ids)} of {len(registry_ids)} features"
        )
    if model.kind == "lr":
        raw = np.abs(model.params["weights"]).mean(axis=1)
    elif model.kind == "nb":
        # Fisher separation: prior-weighted between-class scatter over
        # prior-weighted within-class variance (rare classes with noisy
        # means must not inflate uninformative features)
        means = model.params["means"]  # (k, d)
        variances = model.params["variances"]
        priors = model.params["priors"][:, None]
        grand = (priors * means).sum(axis=0)
        between = (priors * (means - grand) ** 2).sum(axis=0)
        within = (priors * variances).sum(axis=0)
        raw = between / within
    else:
        raw = model.params["importances"]
    return _ranked(tuple(registry_ids), raw, label_id, model.kind)


def permutation_importance(
    model: TrainedModel,
    X: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    n_repeats: int = 5,
) -> WeightedFeatureList:
    """Model-agnostic cross-check: mean F1 drop when one column is shuffled."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    base = evaluate(y, predict(model, X))["F1"]
    drops = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        rng = substream(seed, "perm", model.feature_ids[j])
        for _ in range(n_repeats):
            shuffled = X.copy()
            shuffled[:, j] = shuffled[rng.permutation(X.shape[0]), j]
            drops[j] += base - evaluate(y, predict(model, shuffled))["F1"]
    drops /= n_repeats
    return _ranked(model.feature_ids, np.maximum(drops, 0.0), "", model.kind)


def common_features(lists: Mapping[str, WeightedFeatureList]) -> CommonFeatureSet:
    """top5 of the intersection of the four labels' top-10 lists.

    Survivors are ranked by importance summed across the four lists; if
    fewer than five survive, all of them are kept.
    """
    kinds = {wfl.kind for wfl in lists.values()}
    if len(kinds) != 1:
        raise ValueError(f"lists mix classifier kinds: {sorted(kinds)}")
    provenance = {lid: wfl.top(TOP_PER_LABEL) for lid, wfl in sorted(lists.items())}
    surviving = None
    for ids in provenance.values():
        surviving = set(ids) if surviving is None else surviving & set(ids)
    surviving = surviving or set()
    registry_order = [fid for fid, _ in next(iter(lists.values())).entries]
    summed = {
        fid: sum(wfl.importance_of(fid) for wfl in lists.values()) for fid in surviving
    }
    ranked = sorted(
        surviving, key=lambda fid: (-summed[fid], registry_position(registry_order, fid))
    )
    return CommonFeatureSet(
        kind=kinds.pop(),
        feature_ids=tuple(ranked[:TOP_COMMON]),
        provenance=provenance,
    )


def registry_position(registry_order: Sequence[str], feature_id: str) -> int:
    # registry order is the deterministic tie-break everywhere
    return list(registry_order).index(feature_id)


def specific_features(wfl: WeightedFeatureList, common: CommonFeatureSet) -> SpecificFeatureSet:
    """The label's top-10 minus the common set, original order preserved."""
    if common.kind != wfl.kind:
        raise ValueError(f"common set is for kind {common.kind!r}, list for {wfl.kind!r}")
    kept = tuple(fid for fid in wfl.top(TOP_PER_LABEL) if fid not in common.feature_ids)
    return SpecificFeatureSet(label_id=wfl.label_id, kind=wfl.kind, feature_ids=kept)


@dataclass(frozen=True)
class ImportanceReport:
    """Per-kind rankings, common sets, and per-label specific sets."""

    lists: Mapping[tuple[str, str], WeightedFeatureList]  # (label, kind) -> list
    common: Mapping[str, CommonFeatureSet]  # kind -> common set
    specific: Mapping[tuple[str, str], SpecificFeatureSet]

    def to_dict(self) -> dict:
        return {
            "lists": [
                {
                    "label_id": lid,
                    "kind": kind,
                    "entries": [[fid, imp] for fid, imp in wfl.entries],
                }
                for (lid, kind), wfl in sorted(self.lists.items())
            ],
            "common": {
                kind: {
                    "feature_ids": list(cfs.feature_ids),
                    "provenance": {l: list(ids) for l, ids in cfs.provenance.items()},
                }
                for kind, cfs in sorted(self.common.items())
            },
            "specific": [
                {"label_id": lid, "kind": kind, "feature_ids": list(sfs.feature_ids)}
                for (lid, kind), sfs in sorted(self.specific.items())
            ],
        }


def importance_report(
    matrix: DesignMatrix,
    specs: Sequence[ClassifierSpec],
    label_ids: Sequence[str] | None = None,
) -> ImportanceReport:
    """Train each kind on the full matrix per label and extract all feature sets."""
    label_ids = tuple(label_ids) if label_ids is not None else tuple(sorted(matrix.targets))
    lists: dict[tuple[str, str], WeightedFeatureList] = {}
    for spec in specs:
        for lid in label_ids:
            model = train_arrays(
                spec, matrix.X, np.asarray(matrix.targets[lid], dtype=int), matrix.feature_ids
            )
            lists[(lid, spec.kind)] = model_importance(model, lid, matrix.feature_ids)
    common = {
        spec.kind: common_features({lid: lists[(lid, spec.kind)] for lid in label_ids})
        for spec in specs
    }
    specific = {
        (lid, spec.kind): specific_features(lists[(lid, spec.kind)], common[spec.kind])
        for spec in specs
        for lid in label_ids
    }
    return ImportanceReport(lists=lists, common=common, specific=specific)


# ---------------------------------------------------------------------------
# Ablation (token-only vs utterance-only vs both)
# ---------------------------------------------------------------------------

ABLATION_FILTERS = ("token_only", "utterance_only", "both")


@dataclass(frozen=True)
class AblationTable:
    """F1 per (kind, label, level filter); filters share fold assignments."""

    cells: Mapping[tuple[str, str, str], float]
    k: int
    seed: int
    reports: Mapping[tuple[str, str], MetricsReport]

    def f1(self, kind: str, label_id: str, level_filter: str) -> float:
        return self.cells[(kind, label_id, level_filter)]

    def to_dict(self) -> dict:
        return {
            "cells": [
                {"kind": kind, "label_id": lid, "filter": flt, "F1": f1}
                for (kind, lid, flt), f1 in sorted(self.cells.items())
            ],
            "k": self.k,
            "seed": self.seed,
        }


def run_ablation(
    matrix: DesignMatrix,
    specs: Sequence[ClassifierSpec],
    k: int = 5,
    seed: int = 0,
    label_ids: Sequence[str] | None = None,
) -> AblationTable:
    """Cross-validate every spec under each level filter.

    Fold assignment depends only on (targets, k, seed), so the three filter
    columns are computed on identical folds and stay comparable; the "both"
    column is literally a cross_validate run.
    """
    label_ids = tuple(label_ids) if label_ids is not None else tuple(sorted(matrix.targets))
    cells: dict[tuple[str, str, str], float] = {}
    reports: dict[tuple[str, str], MetricsReport] = {}
    for spec in specs:
        for flt in ABLATION_FILTERS:
            sub = matrix.filtered(flt)
            report = cross_validate(sub, spec, k=k, seed=seed, label_ids=label_ids)
            reports[(spec.kind, flt)] = report
            for lid in label_ids:
                cells[(spec.kind, lid, flt)] = report.entries[(lid, spec.kind)]["F1"]
    return AblationTable(cells=cells, k=k, seed=seed, reports=reports)
