"""Gradient-boosted regression trees for multiclass classification.

Second-order boosting with exact greedy split search: per round a tree is
grown for every class from the softmax gradients/hessians at the current
margins, leaf weights are the L2-regularized Newton step -G/(H+lambda),
and margins accumulate shrinkage-scaled leaf values. Small-scale on
purpose: no histograms, no column subsampling, no sparsity handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, DataError
from .numerics import cross_entropy, softmax
from .serialize import read_model_file, write_model_file

GBT_MAGIC = b"VSTKGBT\x00"
GBT_FORMAT_VERSION = 1

_NO_FEATURE = -1


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 50
    max_depth: int = 3
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    min_child_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError("rounds must be at least 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.l2_lambda < 0:
            raise ConfigError("l2_lambda must be non-negative")
        if self.min_child_weight < 0:
            raise ConfigError("min_child_weight must be non-negative")

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "l2_lambda": self.l2_lambda,
            "min_child_weight": self.min_child_weight,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostConfig":
        return cls(**d)


@dataclass
class RegressionTree:
    """Structure-of-arrays binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Unshrunk leaf value for every row (vectorized descent)."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != _NO_FEATURE
        while active.any():
            rows = np.flatnonzero(active)
            at = node[rows]
            go_left = X[rows, self.feature[at]] < self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])
            active = self.feature[node] != _NO_FEATURE
        return self.leaf_value[node]

    def depth(self) -> int:
        """Longest root-to-leaf edge count, by traversal."""
        best = 0
        stack = [(0, 0)]
        while stack:
            idx, d = stack.pop()
            if self.feature[idx] == _NO_FEATURE:
                best = max(best, d)
            else:
                stack.append((self.left[idx], d + 1))
                stack.append((self.right[idx], d + 1))
        return best

    def to_matrix(self) -> np.ndarray:
        return np.column_stack([
            self.feature.astype(np.float64),
            self.threshold,
            self.left.astype(np.float64),
            self.right.astype(np.float64),
            self.leaf_value,
        ])

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "RegressionTree":
        return cls(
            feature=mat[:, 0].astype(np.int64),
            threshold=mat[:, 1].copy(),
            left=mat[:, 2].astype(np.int64),
            right=mat[:, 3].astype(np.int64),
            leaf_value=mat[:, 4].copy(),
        )


@dataclass
class BoostedModel:
    """rounds x n_classes trees plus the training-loss trace."""

    config: BoostConfig
    n_features: int
    n_classes: int
    trees: list[list[RegressionTree]]
    loss_trace: list[float] = field(default_factory=list)


def _best_split(X: np.ndarray, g: np.ndarray, h: np.ndarray,
                lam: float, min_child_weight: float):
    """Exact greedy search over all (feature, threshold) candidates.

    Returns (gain, feature, threshold) for the best valid split or None.
    Ties resolve to the first candidate in (feature, sorted-position) scan
    order, keeping fits deterministic.
    """
    G, H = g.sum(), h.sum()
    parent_score = G * G / (H + lam)
    best_gain = -np.inf
    best_feature = _NO_FEATURE
    best_threshold = 0.0
    for f in range(X.shape[1]):
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if xs[0] == xs[-1]:
            continue
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        gr = G - gl
        hr = H - hl
        valid = (xs[1:] > xs[:-1]) & (hl >= min_child_weight) & (hr >= min_child_weight)
        if not valid.any():
            continue
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score)
        gain[~valid] = -np.inf
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = float(gain[k])
            best_feature = f
            best_threshold = float((xs[k] + xs[k + 1]) / 2.0)
    if best_feature == _NO_FEATURE:
        return None
    return best_gain, best_feature, best_threshold


def _grow_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray,
               config: BoostConfig) -> RegressionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_value: list[float] = []

    def new_node() -> int:
        feature.append(_NO_FEATURE)
        threshold.append(0.0)
        left.append(_NO_FEATURE)
        right.append(_NO_FEATURE)
        leaf_value.append(0.0)
        return len(feature) - 1

    lam = config.l2_lambda

    def build(rows: np.ndarray, depth: int) -> int:
        node = new_node()
        gs, hs = g[rows], h[rows]
        if depth < config.max_depth and rows.size >= 2:
            found = _best_split(X[rows], gs, hs, lam, config.min_child_weight)
            # Zero-gain splits are accepted: symmetric patterns (e.g. an
            # exclusive-or layout at uniform margins) only pay off a level
            # deeper, and the depth bound caps the cost.
            if found is not None and found[0] >= 0.0:
                _, f, thr = found
                mask = X[rows, f] < thr
                if mask.any() and not mask.all():
                    feature[node] = f
                    threshold[node] = thr
                    left[node] = build(rows[mask], depth + 1)
                    right[node] = build(rows[~mask], depth + 1)
                    return node
        leaf_value[node] = float(-gs.sum() / (hs.sum() + lam))
        return node

    build(np.arange(X.shape[0]), 0)
    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf_value=np.asarray(leaf_value, dtype=np.float64),
    )


def fit(features: np.ndarray, labels: np.ndarray, config: BoostConfig,
        n_classes: int | None = None) -> BoostedModel:
    """Boost rounds x n_classes trees from zero base margins.

    Gradients and hessians for all classes are taken at the margins as of
    the round start, so per-class fits within a round are independent.
    Labels must be dense class indices; pass n_classes explicitly when the
    training subset might not contain every class.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2:
        raise ContractError("features must be a 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise ContractError("features and labels must agree on sample count")
    if X.shape[0] < 2:
        raise ConfigError("boosting needs at least 2 samples")
    distinct = np.unique(y)
    if distinct.size < 2:
        raise ConfigError("boosting needs at least 2 distinct labels")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if n_classes < 2 or y.max() >= n_classes:
        raise ContractError("labels exceed the declared class count")

    S = X.shape[0]
    margins = np.zeros((S, n_classes))
    onehot = np.zeros((S, n_classes))
    onehot[np.arange(S), y] = 1.0

    trees: list[list[RegressionTree]] = []
    loss_trace = [cross_entropy(softmax(margins), y)]
    for _ in range(config.rounds):
        probs = softmax(margins)
        grad = probs - onehot
        hess = probs * (1.0 - probs)
        round_trees = [
            _grow_tree(X, grad[:, c], hess[:, c], config) for c in range(n_classes)
        ]
        for c, tree in enumerate(round_trees):
            margins[:, c] += config.learning_rate * tree.predict(X)
        trees.append(round_trees)
        loss_trace.append(cross_entropy(softmax(margins), y))

    return BoostedModel(
        config=config,
        n_features=X.shape[1],
        n_classes=n_classes,
        trees=trees,
        loss_trace=loss_trace,
    )


def predict_margins(model: BoostedModel, features: np.ndarray) -> np.ndarray:
    """Shrinkage-scaled leaf sums over all trees, from a zero base score."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ContractError(
            f"model expects {model.n_features} features, got shape {X.shape}"
        )
    margins = np.zeros((X.shape[0], model.n_classes))
    for round_trees in model.trees:
        for c, tree in enumerate(round_trees):
            margins[:, c] += model.config.learning_rate * tree.predict(X)
    return margins


def predict_proba(model: BoostedModel, features: np.ndarray) -> np.ndarray:
    return softmax(predict_margins(model, features))


def predict_label(model: BoostedModel, features: np.ndarray) -> np.ndarray:
    """Per-row argmax; ties break toward the lowest class index."""
    return np.argmax(predict_proba(model, features), axis=1)


def save(model: BoostedModel, path: str | Path) -> Path:
    header = {
        "config": model.config.to_dict(),
        "n_features": model.n_features,
        "n_classes": model.n_classes,
        "rounds": len(model.trees),
        "loss_trace": model.loss_trace,
    }
    arrays = [tree.to_matrix() for round_trees in model.trees for tree in round_trees]
    return write_model_file(path, GBT_MAGIC, GBT_FORMAT_VERSION, header, arrays)


def load(path: str | Path) -> BoostedModel:
    header, arrays = read_model_file(path, GBT_MAGIC, GBT_FORMAT_VERSION)
    config = BoostConfig.from_dict(header["config"])
    n_classes = int(header["n_classes"])
    rounds = int(header["rounds"])
    if len(arrays) != rounds * n_classes:
        raise DataError(f"{path}: tree count does not match the stored round/class grid")
    trees = [
        [RegressionTree.from_matrix(arrays[r * n_classes + c]) for c in range(n_classes)]
        for r in range(rounds)
    ]
    return BoostedModel(
        config=config,
        n_features=int(header["n_features"]),
        n_classes=n_classes,
        trees=trees,
        loss_trace=[float(v) for v in header.get("loss_trace", [])],
    )
