"""From-scratch classifiers over feature weights: softmax LR, Gaussian NB, random forest.

All three predict one of the five 1-5 score classes. LR and NB consume
z-scored features (constant columns map to zeros); trees are scale-invariant
and consume raw values. Ties in any argmax resolve toward the lower class
label, and every stochastic step draws from a named substream of the run
seed, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._rng import substream
from .featurize import DesignMatrix

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassifierSpec:
    """Classifier kind plus hyperparameters (defaults cover the common case)."""

    kind: str  # "lr" | "nb" | "rf"
    l2_lambda: float = 1e-2
    learning_rate: float = 0.1
    max_epochs: int = 2000
    tol: float = 1e-6
    variance_smoothing: float = 1e-9
    n_trees: int = 100
    max_depth: int | None = None
    features_per_split: int | str = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("lr", "nb", "rf"):
            raise ValueError(f"kind must be 'lr', 'nb' or 'rf', got {self.kind!r}")
        for name in ("l2_lambda", "learning_rate", "tol", "variance_smoothing"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_epochs < 1 or self.n_trees < 1:
            raise ValueError("max_epochs and n_trees must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive when set")


# ---------------------------------------------------------------------------
# Standardization (training statistics only; never recomputed at predict time)
# ---------------------------------------------------------------------------


def fit_standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = X.max(axis=0) == X.min(axis=0)  # exact, no float-noise std
    return mean, np.where(constant, 0.0, std)


def apply_standardizer(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    safe = np.where(std > 0, std, 1.0)
    Z = (X - mean) / safe
    return np.where(std > 0, Z, 0.0)  # constant columns carry no information


# ---------------------------------------------------------------------------
# Softmax logistic regression
# ---------------------------------------------------------------------------


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def lr_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """L2-regularized mean cross-entropy and its analytic gradient.

    W is (d, k), b is (k,), Y is one-hot (n, k). The bias is not regularized.
    """
    n = X.shape[0]
    P = _softmax(X @ W + b)
    eps = 1e-300
    loss = -float(np.sum(Y * np.log(P + eps))) / n
    loss += 0.5 * l2_lambda * float(np.sum(W * W))
    dW = X.T @ (P - Y) / n + l2_lambda * W
    db = (P - Y).sum(axis=0) / n
    return loss, dW, db


def _fit_lr(spec: ClassifierSpec, Z: np.ndarray, y_idx: np.ndarray, k: int) -> dict:
    n, d = Z.shape
    Y = np.zeros((n, k))
    Y[np.arange(n), y_idx] = 1.0
    W = np.zeros((d, k))
    b = np.zeros(k)
    epochs = 0
    for epochs in range(1, spec.max_epochs + 1):
        _, dW, db = lr_loss_and_grad(W, b, Z, Y, spec.l2_lambda)
        grad_norm = math.sqrt(float(np.sum(dW * dW)) + float(np.sum(db * db)))
        if grad_norm < spec.tol:
            break
        W -= spec.learning_rate * dW
        b -= spec.learning_rate * db
    return {"weights": W, "bias": b, "epochs": epochs}


# ---------------------------------------------------------------------------
# Gaussian Naive Bayes
# ---------------------------------------------------------------------------


def _fit_nb(spec: ClassifierSpec, Z: np.ndarray, y_idx: np.ndarray, k: int) -> dict:
    n, d = Z.shape
    means = np.zeros((k, d))
    variances = np.zeros((k, d))
    priors = np.zeros(k)
    for c in range(k):
        Zc = Z[y_idx == c]
        priors[c] = Zc.shape[0] / n
        means[c] = Zc.mean(axis=0)
        variances[c] = Zc.var(axis=0)
    max_var = float(Z.var(axis=0).max()) if d else 0.0
    smoothing = spec.variance_smoothing * max_var if max_var > 0 else 1e-12
    variances += smoothing
    return {"priors": priors, "means": means, "variances": variances, "smoothing": smoothing}


def _nb_log_posterior(params: Mapping, Z: np.ndarray) -> np.ndarray:
    means = params["means"]
    variances = params["variances"]
    priors = params["priors"]
    # (n, k): log prior + sum of per-feature Gaussian log densities
    out = np.log(priors)[None, :] + np.stack(
        [
            -0.5 * np.sum(np.log(2 * np.pi * variances[c]) + (Z - means[c]) ** 2 / variances[c], axis=1)
            for c in range(means.shape[0])
        ],
        axis=1,
    )
    return out


# ---------------------------------------------------------------------------
# Random forest
# ---------------------------------------------------------------------------


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(np.sum(p * p))


def _class_counts(y_idx: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(y_idx, minlength=k).astype(float)


def _best_split_on(col: np.ndarray, y_idx: np.ndarray, counts: np.ndarray, k: int):
    """Lowest weighted-Gini split of one column, or None if the column is constant.

    Ties go to the smallest threshold so the scan is order-independent.
    """
    n = col.size
    order = np.argsort(col, kind="stable")
    sc = col[order]
    cut = np.flatnonzero(sc[1:] > sc[:-1]) + 1  # split positions between runs
    if cut.size == 0:
        return None
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y_idx[order]] = 1.0
    cum = onehot.cumsum(axis=0)
    left = cum[cut - 1]
    right = counts - left
    n_left = cut.astype(float)
    n_right = n - n_left
    gini_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
    gini_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    j = int(np.argmin(weighted))
    threshold = float((sc[cut[j] - 1] + sc[cut[j]]) / 2.0)
    return float(weighted[j]), threshold


def _build_tree(
    X: np.ndarray,
    y_idx: np.ndarray,
    k: int,
    rng: np.random.Generator,
    features_per_split: int,
    max_depth: int | None,
    n_root: int,
    importance: np.ndarray,
    depth: int = 0,
) -> dict:
    counts = _class_counts(y_idx, k)
    node_gini = _gini(counts)
    n_node = len(y_idx)
    leaf = {"counts": counts}
    if node_gini == 0.0 or n_node < 2 or (max_depth is not None and depth >= max_depth):
        return leaf

    d = X.shape[1]
    candidates = rng.choice(d, size=min(features_per_split, d), replace=False)
    best = None  # (weighted_gini, feature, threshold)
    for f in candidates:
        found = _best_split_on(X[:, f], y_idx, counts, k)
        if found is None:
            continue
        weighted, threshold = found
        if best is None or weighted < best[0]:
            best = (weighted, int(f), threshold)
    if best is None or best[0] >= node_gini:
        return leaf

    weighted_gini, feature, threshold = best
    importance[feature] += (n_node / n_root) * (node_gini - weighted_gini)
    mask = X[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _build_tree(
            X[mask], y_idx[mask], k, rng, features_per_split, max_depth, n_root, importance, depth + 1
        ),
        "right": _build_tree(
            X[~mask], y_idx[~mask], k, rng, features_per_split, max_depth, n_root, importance, depth + 1
        ),
        "counts": counts,
    }


def _tree_leaf(tree: Mapping, x: np.ndarray) -> np.ndarray:
    node = tree
    while "feature" in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["counts"]


def _tree_votes(tree: Mapping, X: np.ndarray) -> np.ndarray:
    """Predicted class index per row (ties toward the lower class)."""
    out = np.empty(X.shape[0], dtype=int)
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if "feature" not in node:
            out[idx] = _argmax_low(node["counts"])
            continue
        mask = X[idx, node["feature"]] <= node["threshold"]
        stack.append((node["left"], idx[mask]))
        stack.append((node["right"], idx[~mask]))
    return out


def _resolve_features_per_split(value: int | str, d: int) -> int:
    if value == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if value == "all":
        return d
    value = int(value)
    if not 1 <= value <= d:
        raise ValueError(f"features_per_split {value} outside 1..{d}")
    return value


def _fit_rf(spec: ClassifierSpec, X: np.ndarray, y_idx: np.ndarray, k: int) -> dict:
    n, d = X.shape
    fps = _resolve_features_per_split(spec.features_per_split, d)
    trees = []
    importances = np.zeros((spec.n_trees, d))
    for t in range(spec.n_trees):
        rng = substream(spec.seed, "rf", str(t))
        idx = rng.integers(0, n, size=n)  # bootstrap sample
        trees.append(
            _build_tree(
                X[idx], y_idx[idx], k, rng, fps, spec.max_depth, n, importances[t]
            )
        )
    return {
        "trees": trees,
        "importances": importances.mean(axis=0),
        "features_per_split": fps,
    }


# ---------------------------------------------------------------------------
# Train / predict
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    classes: tuple[int, ...]  # ascending
    feature_ids: tuple[str, ...]
    params: Mapping
    mean: np.ndarray
    std: np.ndarray
    spec: ClassifierSpec
    notes: tuple[str, ...] = ()


def train(spec: ClassifierSpec, matrix: DesignMatrix, label_id: str) -> TrainedModel:
    """Fit one classifier for one label over the matrix rows."""
    X = matrix.X
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix contains non-finite values")
    if label_id not in matrix.targets:
        raise KeyError(f"matrix has no target column for label {label_id!r}")
    y = np.asarray(matrix.targets[label_id], dtype=int)
    return train_arrays(spec, X, y, matrix.feature_ids)


def train_arrays(
    spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, feature_ids: Sequence[str]
) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature value in training data")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training labels contain a single class")
    y_idx = np.searchsorted(classes, y)
    k = classes.size

    mean, std = fit_standardizer(X)
    if spec.kind == "rf":
        params = _fit_rf(spec, X, y_idx, k)
    else:
        Z = apply_standardizer(X, mean, std)
        params = _fit_lr(spec, Z, y_idx, k) if spec.kind == "lr" else _fit_nb(spec, Z, y_idx, k)
    return TrainedModel(
        kind=spec.kind,
        classes=tuple(int(c) for c in classes),
        feature_ids=tuple(feature_ids),
        params=params,
        mean=mean,
        std=std,
        spec=spec,
    )


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Class-probability vectors (lr/nb) or vote fractions (rf), columns in class order."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.feature_ids):
        raise ValueError(
            f"expected {len(model.feature_ids)} feature columns, got {X.shape[1] if X.ndim == 2 else X.shape}"
        )
    k = len(model.classes)
    if model.kind == "rf":
        votes = np.zeros((X.shape[0], k))
        rows = np.arange(X.shape[0])
        for tree in model.params["trees"]:
            votes[rows, _tree_votes(tree, X)] += 1
        return votes / len(model.params["trees"])
    Z = apply_standardizer(X, model.mean, model.std)
    if model.kind == "lr":
        return _softmax(Z @ model.params["weights"] + model.params["bias"])
    log_post = _nb_log_posterior(model.params, Z)
    shifted = log_post - log_post.max(axis=1, keepdims=True)
    post = np.exp(shifted)
    return post / post.sum(axis=1, keepdims=True)


def _argmax_low(scores: np.ndarray) -> int:
    # np.argmax already returns the first (= lowest class) index on ties
    return int(np.argmax(scores))


def predict(model: TrainedModel, X) -> np.ndarray:
    """Predicted class labels; ties break toward the lower class."""
    if isinstance(X, DesignMatrix):
        if X.feature_ids != model.feature_ids:
            raise ValueError("matrix feature columns do not match training columns")
        X = X.X
    proba = predict_proba(model, X)
    classes = np.asarray(model.classes)
    return classes[np.argmax(proba, axis=1)]


# ---------------------------------------------------------------------------
# Metrics (support-weighted, so weighted recall is identically accuracy)
# ---------------------------------------------------------------------------


def evaluate(y_true, y_pred) -> dict[str, float]:
    """ACC plus support-weighted one-vs-rest PRE/REC/F1.

    Classes with zero predicted positives contribute precision 0 rather
    than being dropped.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if y_true.size == 0:
        raise ValueError("need at least one prediction")
    n = y_true.size
    correct = int(np.sum(y_true == y_pred))
    pre = f1 = 0.0
    total_tp = 0
    for c in np.unique(y_true):
        support = int(np.sum(y_true == c))
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        predicted = int(np.sum(y_pred == c))
        p = tp / predicted if predicted > 0 else 0.0
        r = tp / support
        f = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
        w = support / n
        pre += w * p
        f1 += w * f
        total_tp += tp
    # weighted recall telescopes to total-TP/n, the same integer division as
    # accuracy, so the ACC == weighted-REC identity holds bit for bit
    return {"ACC": correct / n, "PRE": pre, "REC": total_tp / n, "F1": f1}


# ---------------------------------------------------------------------------
# Cross-validation harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    """Per (label, classifier kind) metric cells plus bookkeeping notes."""

    entries: Mapping[tuple[str, str], Mapping[str, float]]
    notes: tuple[str, ...] = ()
    k: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"label_id": lid, "kind": kind, "metrics": dict(metrics)}
                for (lid, kind), metrics in sorted(self.entries.items())
            ],
            "notes": list(self.notes),
            "k": self.k,
            "seed": self.seed,
        }


def stratified_folds(y: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, tuple[str, ...]]:
    """Deterministic stratified fold assignment.

    Returns (fold index per row, notes). Rows of single-instance classes get
    fold -1: they stay on the training side of every split.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    y = np.asarray(y)
    folds = np.full(y.shape[0], -1, dtype=int)
    notes = []
    rng = substream(seed, "folds")
    next_fold = 0  # rotate start fold across classes to balance fold sizes
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.size == 1:
            notes.append(f"class {int(c)} has a single instance; kept on the training side")
            continue
        idx = idx[rng.permutation(idx.size)]
        for j, row in enumerate(idx):
            folds[row] = (next_fold + j) % k
        next_fold = (next_fold + idx.size) % k
    return folds, tuple(notes)


def cross_validate(
    matrix: DesignMatrix,
    spec: ClassifierSpec,
    k: int = 5,
    seed: int = 0,
    label_ids: Sequence[str] | None = None,
) -> MetricsReport:
    """Stratified k-fold metrics, averaged over folds, per label."""
    label_ids = tuple(label_ids) if label_ids is not None else tuple(sorted(matrix.targets))
    entries = {}
    all_notes: list[str] = []
    for lid in label_ids:
        y = np.asarray(matrix.targets[lid], dtype=int)
        folds, notes = stratified_folds(y, k, seed)
        all_notes.extend(f"{lid}: {note}" for note in notes)
        scores = []
        for fold in range(k):
            test = folds == fold
            train_side = ~test
            if not test.any():
                continue
            model = train_arrays(spec, matrix.X[train_side], y[train_side], matrix.feature_ids)
            y_pred = predict(model, matrix.X[test])
            scores.append(evaluate(y[test], y_pred))
        if not scores:
            raise ValueError(f"label {lid!r}: no usable folds")
        entries[(lid, spec.kind)] = {
            m: float(np.mean([s[m] for s in scores])) for m in ("ACC", "PRE", "REC", "F1")
        }
    return MetricsReport(entries=entries, notes=tuple(all_notes), k=k, seed=seed)


# ---------------------------------------------------------------------------
# Raw-text bag-of-words baseline
# ---------------------------------------------------------------------------


def bow_matrix(minis) -> tuple[np.ndarray, tuple[str, ...]]:
    """Token-count matrix over the vocabulary of the minis' raw text."""
    vocab: dict[str, int] = {}
    rows = []
    for m in minis:
        counts: dict[int, int] = {}
        for token in m.raw_text.lower().split():
            j = vocab.setdefault(token, len(vocab))
            counts[j] = counts.get(j, 0) + 1
        rows.append(counts)
    if not vocab:
        raise ValueError("empty vocabulary: minis carry no raw text")
    X = np.zeros((len(rows), len(vocab)))
    for i, counts in enumerate(rows):
        for j, c in counts.items():
            X[i, j] = c
    return X, tuple(vocab)


def bow_baseline(minis, label_id: str, k: int = 5, seed: int = 0) -> MetricsReport:
    """LR over raw-text bag-of-words counts; tagged so it is never mistaken
    for the feature-weight pipeline."""
    X, vocab = bow_matrix(minis)
    y = np.asarray([m.inherited_labels[label_id] for m in minis], dtype=int)
    folds, notes = stratified_folds(y, k, seed)
    spec = ClassifierSpec(kind="lr", seed=seed)
    scores = []
    for fold in range(k):
        test = folds == fold
        if not test.any():
            continue
        model = train_arrays(spec, X[~test], y[~test], vocab)
        scores.append(evaluate(y[test], predict(model, X[test])))
    entries = {
        (label_id, "lr"): {m: float(np.mean([s[m] for s in scores])) for m in ("ACC", "PRE", "REC", "F1")}
    }
    return MetricsReport(
        entries=entries,
        notes=("baseline=raw_text",) + tuple(f"{label_id}: {n}" for n in notes),
        k=k,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Model serialization (versioned JSON)
# ---------------------------------------------------------------------------


def _tree_to_dict(node: Mapping) -> dict:
    out = {"counts": [float(v) for v in node["counts"]]}
    if "feature" in node:
        out.update(
            feature=node["feature"],
            threshold=node["threshold"],
            left=_tree_to_dict(node["left"]),
            right=_tree_to_dict(node["right"]),
        )
    return out


def _tree_from_dict(obj: Mapping) -> dict:
    out = {"counts": np.asarray(obj["counts"], dtype=float)}
    if "feature" in obj:
        out.update(
            feature=int(obj["feature"]),
            threshold=float(obj["threshold"]),
            left=_tree_from_dict(obj["left"]),
            right=_tree_from_dict(obj["right"]),
        )
    return out


def model_to_dict(model: TrainedModel) -> dict:
    params: dict
    if model.kind == "lr":
        params = {
            "weights": model.params["weights"].tolist(),
            "bias": model.params["bias"].tolist(),
            "epochs": model.params["epochs"],
        }
    elif model.kind == "nb":
        params = {
            "priors": model.params["priors"].tolist(),
            "means": model.params["means"].tolist(),
            "variances": model.params["variances"].tolist(),
            "smoothing": model.params["smoothing"],
        }
    else:
        params = {
            "trees": [_tree_to_dict(t) for t in model.params["trees"]],
            "importances": model.params["importances"].tolist(),
            "features_per_split": model.params["features_per_split"],
        }
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "classes": list(model.classes),
        "feature_ids": list(model.feature_ids),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "params": params,
        "spec": {
            "kind": model.spec.kind,
            "l2_lambda": model.spec.l2_lambda,
            "learning_rate": model.spec.learning_rate,
            "max_epochs": model.spec.max_epochs,
            "tol": model.spec.tol,
            "variance_smoothing": model.spec.variance_smoothing,
            "n_trees": model.spec.n_trees,
            "max_depth": model.spec.max_depth,
            "features_per_split": model.spec.features_per_split,
            "seed": model.spec.seed,
        },
        "notes": list(model.notes),
    }


def model_from_dict(payload: Mapping) -> TrainedModel:
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    kind = payload["kind"]
    raw = payload["params"]
    if kind == "lr":
        params = {
            "weights": np.asarray(raw["weights"], dtype=float),
            "bias": np.asarray(raw["bias"], dtype=float),
            "epochs": int(raw["epochs"]),
        }
    elif kind == "nb":
        params = {
            "priors": np.asarray(raw["priors"], dtype=float),
            "means": np.asarray(raw["means"], dtype=float),
            "variances": np.asarray(raw["variances"], dtype=float),
            "smoothing": float(raw["smoothing"]),
        }
    else:
        params = {
            "trees": [_tree_from_dict(t) for t in raw["trees"]],
            "importances": np.asarray(raw["importances"], dtype=float),
            "features_per_split": int(raw["features_per_split"]),
        }
    spec_raw = payload["spec"]
    fps = spec_raw["features_per_split"]
    spec = ClassifierSpec(
        kind=spec_raw["kind"],
        l2_lambda=spec_raw["l2_lambda"],
        learning_rate=spec_raw["learning_rate"],
        max_epochs=spec_raw["max_epochs"],
        tol=spec_raw["tol"],
        variance_smoothing=spec_raw["variance_smoothing"],
        n_trees=spec_raw["n_trees"],
        max_depth=spec_raw["max_depth"],
        features_per_split=fps if isinstance(fps, str) else int(fps),
        seed=spec_raw["seed"],
    )
    return TrainedModel(
        kind=kind,
        classes=tuple(int(c) for c in payload["classes"]),
        feature_ids=tuple(payload["feature_ids"]),
        params=params,
        mean=np.asarray(payload["mean"], dtype=float),
        std=np.asarray(payload["std"], dtype=float),
        spec=spec,
        notes=tuple(payload.get("notes", ())),
    )
