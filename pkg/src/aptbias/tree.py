"""Small CART classifier over the three log features.

Plain Gini-impurity CART with axis-aligned splits at midpoints of sorted
distinct values. Everything is deterministic for a fixed dataset ordering:
features are scanned in index order, thresholds ascending, and a split is
replaced only by a strictly better one. Samples equal to a threshold go
left.

The profile classifier trains one tree per bias bit rather than a single
8-class tree; the full label is the concatenation of the three bit
predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .biases import BiasState
from .inference import FeatureVector

__all__ = [
    "TreeNode",
    "fit_tree",
    "predict_tree",
    "tree_depth",
    "BiasTreeModel",
    "train_tree",
    "classify",
]


@dataclass
class TreeNode:
    label: int
    samples: int
    impurity: float
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        data = {"label": int(self.label), "samples": self.samples, "impurity": self.impurity}
        if not self.is_leaf:
            data.update(
                feature=self.feature,
                threshold=self.threshold,
                left=self.left.to_dict(),
                right=self.right.to_dict(),
            )
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TreeNode":
        node = cls(label=data["label"], samples=data["samples"], impurity=data["impurity"])
        if "feature" in data:
            node.feature = data["feature"]
            node.threshold = data["threshold"]
            node.left = cls.from_dict(data["left"])
            node.right = cls.from_dict(data["right"])
        return node


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    fractions = counts / total
    return float(1.0 - (fractions**2).sum())


def _majority(counts: np.ndarray) -> int:
    return int(np.argmax(counts))  # ties resolve to the smallest label


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int):
    """Strictly-best (gain, feature, threshold) split, or None."""
    parent_counts = np.bincount(y, minlength=n_classes)
    parent_impurity = _gini(parent_counts)
    n = len(y)
    best = None
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        labels = y[order]
        left_counts = np.zeros(n_classes)
        right_counts = parent_counts.astype(float).copy()
        for i in range(n - 1):
            left_counts[labels[i]] += 1
            right_counts[labels[i]] -= 1
            if values[i] == values[i + 1]:
                continue
            n_left = i + 1
            n_right = n - n_left
            child = (n_left * _gini(left_counts) + n_right * _gini(right_counts)) / n
            gain = parent_impurity - child
            if best is None or gain > best[0] + 1e-12:
                threshold = (values[i] + values[i + 1]) / 2.0
                best = (gain, feature, threshold)
    return best


def fit_tree(
    X: Sequence[Sequence[float]],
    y: Sequence[int],
    max_depth: int = 6,
    min_samples_split: int = 2,
) -> TreeNode:
    """Grow a CART classifier; single-class data yields a depth-0 leaf."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("X must be a nonempty 2-d array aligned with y")
    if (y < 0).any():
        raise ValueError("labels must be nonnegative integers")
    n_classes = int(y.max()) + 1

    def build(rows: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(y[rows], minlength=n_classes)
        node = TreeNode(label=_majority(counts), samples=len(rows), impurity=_gini(counts))
        if (
            depth >= max_depth
            or len(rows) < min_samples_split
            or node.impurity == 0.0
        ):
            return node
        split = _best_split(X[rows], y[rows], n_classes)
        if split is None or split[0] <= 0.0:
            return node
        _, feature, threshold = split
        mask = X[rows, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = build(rows[mask], depth + 1)
        node.right = build(rows[~mask], depth + 1)
        return node

    return build(np.arange(len(y)), 0)


def predict_tree(node: TreeNode, x: Sequence[float]) -> int:
    """Root-to-leaf descent; values equal to a threshold go left."""
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


def tree_depth(node: TreeNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


@dataclass
class BiasTreeModel:
    """Three per-bit CARTs predicting the full bias profile."""

    loss_tree: TreeNode
    confirm_tree: TreeNode
    sunk_tree: TreeNode
    max_depth: int = 6

    _BITS = ("loss", "confirm", "sunk")

    @classmethod
    def train(
        cls,
        features: Sequence[FeatureVector],
        states: Sequence[BiasState],
        max_depth: int = 6,
    ) -> "BiasTreeModel":
        if len(features) != len(states) or not features:
            raise ValueError("features and states must be aligned and nonempty")
        X = np.array([f.as_array() for f in features])
        bits = np.array([s.bits for s in states], dtype=int)
        return cls(
            loss_tree=fit_tree(X, bits[:, 0], max_depth),
            confirm_tree=fit_tree(X, bits[:, 1], max_depth),
            sunk_tree=fit_tree(X, bits[:, 2], max_depth),
            max_depth=max_depth,
        )

    def predict_bits(self, fv: FeatureVector) -> tuple[int, int, int]:
        x = fv.as_array()
        return (
            predict_tree(self.loss_tree, x),
            predict_tree(self.confirm_tree, x),
            predict_tree(self.sunk_tree, x),
        )

    def predict(self, fv: FeatureVector) -> BiasState:
        return BiasState.from_bits(*self.predict_bits(fv))

    def bit_accuracies(
        self, features: Sequence[FeatureVector], states: Sequence[BiasState]
    ) -> dict[str, float]:
        if not features:
            raise ValueError("empty evaluation set")
        hits = np.zeros(3)
        for fv, state in zip(features, states):
            predicted = self.predict_bits(fv)
            hits += np.array(predicted) == np.array(state.bits)
        return dict(zip(self._BITS, (hits / len(features)).tolist()))

    def to_dict(self) -> dict:
        return {
            "schema": "apt-bias-tree",
            "version": 1,
            "max_depth": self.max_depth,
            "trees": {
                "loss": self.loss_tree.to_dict(),
                "confirm": self.confirm_tree.to_dict(),
                "sunk": self.sunk_tree.to_dict(),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BiasTreeModel":
        if data.get("schema") != "apt-bias-tree":
            raise ValueError("not a bias-tree document")
        trees = data["trees"]
        return cls(
            loss_tree=TreeNode.from_dict(trees["loss"]),
            confirm_tree=TreeNode.from_dict(trees["confirm"]),
            sunk_tree=TreeNode.from_dict(trees["sunk"]),
            max_depth=int(data["max_depth"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "BiasTreeModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_tree(
    dataset: Sequence[tuple[FeatureVector, BiasState]], max_depth: int = 6
) -> BiasTreeModel:
    """Train the profile classifier from (features, profile) pairs."""
    if not dataset:
        raise ValueError("dataset must be nonempty")
    features, states = zip(*dataset)
    return BiasTreeModel.train(features, states, max_depth)


def classify(model: BiasTreeModel, fv: FeatureVector) -> BiasState:
    """Predict the bias profile for one feature vector."""
    return model.predict(fv)
