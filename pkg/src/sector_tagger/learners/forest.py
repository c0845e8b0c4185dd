"""Tree ensembles: bagged random forests and logistic-loss gradient boosting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .tree import ColumnIndex, DecisionTree, as_csr, check_dimension, grow_tree

RANDOM_FOREST = "random_forest"
GRADIENT_BOOSTING = "gradient_boosting"
# bound on a single GBM leaf step; pure leaves would otherwise diverge
LEAF_CLAMP = 4.0


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    mode: str
    feature_dimension: int
    learning_rate: float = 1.0
    base_score: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (RANDOM_FOREST, GRADIENT_BOOSTING):
            raise ValueError(f"unknown ensemble mode {self.mode!r}")
        if self.mode == RANDOM_FOREST and not self.trees:
            raise ValueError("a random forest needs at least one tree")
        object.__setattr__(self, "trees", tuple(self.trees))

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def raw_score(self, X) -> np.ndarray:
        """Log-odds for boosting; mean leaf proportion for forests."""
        X = as_csr(X)
        check_dimension(X, self.feature_dimension)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.value[tree.apply(X)]
        if self.mode == RANDOM_FOREST:
            return total / len(self.trees)
        return self.base_score + self.learning_rate * total

    def predict_proba(self, X) -> np.ndarray:
        score = self.raw_score(X)
        return score if self.mode == RANDOM_FOREST else expit(score)


def _check_xy(X, y) -> tuple[ColumnIndex, np.ndarray]:
    index = ColumnIndex(X)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or len(y) != index.n_rows:
        raise ValueError("X and y disagree on the number of samples")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return index, y


def resolve_max_features(max_features, n_features: int) -> int | None:
    """``"sqrt"`` -> ceil(sqrt(p)); ``None`` or ``"all"`` -> no subsampling."""
    if max_features is None or max_features == "all":
        return None
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if isinstance(max_features, int) and max_features >= 1:
        return max_features
    raise ValueError(f"max_features must be 'sqrt', 'all', None or a positive int, got {max_features!r}")


def tree_rng(seed, tree_index: int) -> np.random.Generator:
    """Generator for one tree; ``seed`` is an int or a sequence of ints."""
    return np.random.default_rng([*np.atleast_1d(seed).tolist(), tree_index])


def fit_random_forest(
    X,
    y,
    n_trees: int = 100,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features="sqrt",
    bootstrap: bool = True,
    seed=0,
) -> ForestModel:
    """Bagged Gini trees; each node draws its candidate features at random.

    Tree ``m`` owns the generator seeded by ``(seed, m)``, so the forest is
    the same whatever order trees are grown in.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    index, y = _check_xy(X, y)
    n = index.n_rows
    if n < 2 * min_samples_leaf:
        raise ValueError("need at least 2 * min_samples_leaf samples")
    k = resolve_max_features(max_features, index.n_features)
    trees = []
    for m in range(n_trees):
        rng = tree_rng(seed, m)
        if bootstrap:
            weight = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        else:
            weight = np.ones(n)
        trees.append(grow_tree(index, y, weight, "gini", max_depth, min_samples_leaf, k, rng).tree)
    params = {
        "n_trees": n_trees,
        "max_depth": max_depth,
        "min_samples_leaf": min_samples_leaf,
        "max_features": max_features,
        "bootstrap": bootstrap,
        "seed": np.atleast_1d(seed).tolist() if not isinstance(seed, int) else seed,
    }
    return ForestModel(tuple(trees), RANDOM_FOREST, index.n_features, params=params)


def log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean logistic loss of raw scores."""
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def fit_gbm(
    X,
    y,
    n_stages: int = 100,
    learning_rate: float = 0.1,
    max_depth: int | None = 3,
    min_samples_leaf: int = 1,
    loss_trace: list | None = None,
) -> ForestModel:
    """Stagewise logistic boosting with squared-error trees and Newton leaves.

    ``loss_trace``, when given, receives the training log-loss before the
    first stage and after every stage.
    """
    if n_stages < 0:
        raise ValueError("n_stages must be non-negative")
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError("learning_rate must lie in (0, 1]")
    index, y = _check_xy(X, y)
    rate = y.mean()
    if rate in (0.0, 1.0):
        raise ValueError("gradient boosting needs both classes in y")
    base = math.log(rate / (1.0 - rate))
    n = index.n_rows
    weight = np.ones(n)
    raw = np.full(n, base)
    if loss_trace is not None:
        loss_trace.append(log_loss(y, raw))
    trees = []
    for _ in range(n_stages):
        p = expit(raw)
        residual = y - p
        grown = grow_tree(index, residual, weight, "mse", max_depth, min_samples_leaf)
        tree = grown.tree
        leaves = grown.leaf_of_row
        num = np.bincount(leaves, weights=residual, minlength=tree.node_count)
        den = np.bincount(leaves, weights=p * (1.0 - p), minlength=tree.node_count)
        is_leaf = tree.is_leaf
        step = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        step[(den <= 0) & (num != 0)] = np.sign(num[(den <= 0) & (num != 0)]) * LEAF_CLAMP
        tree.value[is_leaf] = np.clip(step[is_leaf], -LEAF_CLAMP, LEAF_CLAMP)
        raw = raw + learning_rate * tree.value[leaves]
        trees.append(tree)
        if loss_trace is not None:
            loss_trace.append(log_loss(y, raw))
    params = {
        "n_stages": n_stages,
        "learning_rate": learning_rate,
        "max_depth": max_depth,
        "min_samples_leaf": min_samples_leaf,
    }
    return ForestModel(tuple(trees), GRADIENT_BOOSTING, index.n_features, learning_rate, base, params)
