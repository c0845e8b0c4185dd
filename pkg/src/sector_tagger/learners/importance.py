"""Feature-importance measures for fitted models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forest import ForestModel
from .logistic import LogisticModel
from .tree import DecisionTree

METHODS = ("mdi", "prediction_change", "abs_coefficient")


@dataclass(frozen=True)
class ImportanceVector:
    scores: np.ndarray
    method: str
    raw: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown importance method {self.method!r}")

    def __len__(self) -> int:
        return len(self.scores)


def tree_mdi(tree: DecisionTree) -> np.ndarray:
    """Impurity decrease of each split, weighted by the share of samples reaching it."""
    out = np.zeros(tree.n_features)
    total = tree.n_samples[0]
    for t in np.flatnonzero(~tree.is_leaf):
        left, right = tree.left[t], tree.right[t]
        n_t = tree.n_samples[t]
        decrease = (
            tree.impurity[t]
            - tree.n_samples[left] / n_t * tree.impurity[left]
            - tree.n_samples[right] / n_t * tree.impurity[right]
        )
        out[tree.feature[t]] += n_t / total * decrease
    return out


def importance_mdi(model: ForestModel) -> ImportanceVector:
    """Per-tree weighted impurity decrease averaged over the ensemble (not normalized)."""
    if not isinstance(model, ForestModel):
        raise TypeError("MDI needs a fitted tree ensemble")
    total = np.zeros(model.feature_dimension)
    for tree in model.trees:
        total += tree_mdi(tree)
    if model.trees:
        total /= len(model.trees)
    return ImportanceVector(total, "mdi")


def subtree_summary(tree: DecisionTree) -> tuple[np.ndarray, np.ndarray]:
    """Weight-averaged leaf value and summed leaf weight below every node."""
    value = tree.value.copy()
    weight = tree.n_samples.copy()
    # children always follow their parent in node order
    for t in range(tree.node_count - 1, -1, -1):
        if tree.feature[t] >= 0:
            left, right = tree.left[t], tree.right[t]
            weight[t] = weight[left] + weight[right]
            value[t] = (value[left] * weight[left] + value[right] * weight[right]) / weight[t]
    return value, weight


def tree_prediction_change(tree: DecisionTree) -> np.ndarray:
    out = np.zeros(tree.n_features)
    value, weight = subtree_summary(tree)
    for t in np.flatnonzero(~tree.is_leaf):
        v1, c1 = value[tree.left[t]], weight[tree.left[t]]
        v2, c2 = value[tree.right[t]], weight[tree.right[t]]
        # (v1-avr)^2*c1 + (v2-avr)^2*c2 in closed form; exactly 0 when v1 == v2
        out[tree.feature[t]] += (v1 - v2) ** 2 * c1 * c2 / (c1 + c2)
    return out


def importance_prediction_change(model: ForestModel) -> ImportanceVector:
    """Squared deviation of child-subtree values around their mean, summed over splits.

    ``raw`` holds the sums; ``scores`` rescales them to total 100 (all zero
    when no split changes the prediction).
    """
    if not isinstance(model, ForestModel):
        raise TypeError("prediction-change importance needs a fitted tree ensemble")
    raw = np.zeros(model.feature_dimension)
    for tree in model.trees:
        raw += tree_prediction_change(tree)
    total = raw.sum()
    scores = raw * (100.0 / total) if total > 0 else np.zeros_like(raw)
    return ImportanceVector(scores, "prediction_change", raw)


def importance_abs_coefficient(model: LogisticModel) -> ImportanceVector:
    if not isinstance(model, LogisticModel):
        raise TypeError("coefficient importance needs a fitted logistic model")
    return ImportanceVector(np.abs(model.beta), "abs_coefficient")
