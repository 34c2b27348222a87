"""Turn span annotations of mini-dialogues into per-feature weights and design matrices.

For one feature in one mini-dialogue, each annotator i contributes a marked
token count c_i (union of their spans). The feature weight is

    x = sum_i (c_i / sum_j c_j) * (c_i / c_total)

a weighted average of the per-annotator marked fractions in which heavier
markers count more: under-marking is a more prevalent mistake than
over-marking, so sparse annotators are deliberately down-weighted. The
empty case sum_j c_j = 0 maps to x = 0 (no evidence).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import FeatureDef, MiniDialogue


def marked_counts(mini: MiniDialogue, feature_id: str) -> dict[str, int]:
    """Marked-token count per annotator, counting each token once (span union)."""
    marked: dict[str, set[tuple[int, int]]] = {}
    for s in mini.projected_spans:
        if s.feature_id != feature_id:
            continue
        tokens = marked.setdefault(s.annotator_id, set())
        tokens.update((s.turn_index, t) for t in range(s.start, s.end))
    return {ann: len(tokens) for ann, tokens in sorted(marked.items())}


def feature_weight(mini: MiniDialogue, feature_id: str) -> float:
    """The weight x for one feature of one mini-dialogue."""
    c_total = mini.token_count
    if c_total < 1:
        raise ValueError(f"mini {mini.id!r} has no tokens")
    counts = list(marked_counts(mini, feature_id).values())
    c_sum = sum(counts)
    if c_sum == 0:
        return 0.0
    return sum((c / c_sum) * (c / c_total) for c in counts)


@dataclass(frozen=True)
class FeatureVector:
    mini_dialogue_id: str
    weights: Mapping[str, float]
    annotator_count: int
    token_total: int


def feature_vector(mini: MiniDialogue, registry: Sequence[FeatureDef]) -> FeatureVector:
    """All registry feature weights for one mini, in registry order."""
    annotators = {s.annotator_id for s in mini.projected_spans}
    return FeatureVector(
        mini_dialogue_id=mini.id,
        weights={f.id: feature_weight(mini, f.id) for f in registry},
        annotator_count=len(annotators),
        token_total=mini.token_count,
    )


@dataclass(frozen=True)
class DesignMatrix:
    """Rows = mini-dialogues, columns = registry features (optionally level-filtered)."""

    mini_ids: tuple[str, ...]
    feature_ids: tuple[str, ...]
    feature_levels: tuple[str, ...]
    X: np.ndarray
    targets: Mapping[str, np.ndarray]

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def filtered(self, level_filter: str) -> "DesignMatrix":
        """Column subset by feature level: 'token_only', 'utterance_only', or 'both'."""
        keep = _level_mask(self.feature_levels, level_filter)
        return DesignMatrix(
            mini_ids=self.mini_ids,
            feature_ids=tuple(f for f, k in zip(self.feature_ids, keep) if k),
            feature_levels=tuple(l for l, k in zip(self.feature_levels, keep) if k),
            X=self.X[:, keep],
            targets=self.targets,
        )

    def to_dict(self) -> dict:
        return {
            "mini_ids": list(self.mini_ids),
            "feature_ids": list(self.feature_ids),
            "feature_levels": list(self.feature_levels),
            "rows": [[float(v) for v in row] for row in self.X],
            "targets": {lid: [int(v) for v in y] for lid, y in self.targets.items()},
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "DesignMatrix":
        return cls(
            mini_ids=tuple(payload["mini_ids"]),
            feature_ids=tuple(payload["feature_ids"]),
            feature_levels=tuple(payload["feature_levels"]),
            X=np.asarray(payload["rows"], dtype=float),
            targets={lid: np.asarray(y, dtype=int) for lid, y in payload["targets"].items()},
        )

    def to_csv(self) -> str:
        header = ["mini_id", *self.feature_ids, *(f"target:{l}" for l in sorted(self.targets))]
        lines = [",".join(header)]
        for i, mini_id in enumerate(self.mini_ids):
            cells = [mini_id]
            cells += [repr(float(v)) for v in self.X[i]]
            cells += [str(int(self.targets[l][i])) for l in sorted(self.targets)]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _level_mask(levels: Sequence[str], level_filter: str) -> np.ndarray:
    if level_filter == "both":
        return np.ones(len(levels), dtype=bool)
    if level_filter == "token_only":
        return np.asarray([l == "token" for l in levels])
    if level_filter == "utterance_only":
        return np.asarray([l == "utterance" for l in levels])
    raise ValueError(
        f"level_filter must be 'token_only', 'utterance_only' or 'both', got {level_filter!r}"
    )


def build_matrix(
    minis: Sequence[MiniDialogue],
    registry: Sequence[FeatureDef],
    level_filter: str = "both",
) -> DesignMatrix:
    """One row per mini, one column per registry feature passing the filter.

    Targets come from each mini's inherited labels; minis missing a label are
    rejected so no target cell is ever missing.
    """
    keep = _level_mask([f.level for f in registry], level_filter)
    kept = [f for f, k in zip(registry, keep) if k]
    rows = []
    for m in minis:
        if m.token_count < 1:
            raise ValueError(f"mini {m.id!r} has no tokens")
        rows.append([feature_weight(m, f.id) for f in kept])
    label_ids = sorted({lid for m in minis for lid in m.inherited_labels})
    targets = {}
    for lid in label_ids:
        missing = [m.id for m in minis if lid not in m.inherited_labels]
        if missing:
            raise ValueError(f"minis missing label {lid!r}: {missing[:3]}")
        targets[lid] = np.asarray([m.inherited_labels[lid] for m in minis], dtype=int)
    return DesignMatrix(
        mini_ids=tuple(m.id for m in minis),
        feature_ids=tuple(f.id for f in kept),
        feature_levels=tuple(f.level for f in kept),
        X=np.asarray(rows, dtype=float) if rows else np.zeros((0, len(kept))),
        targets=targets,
    )
