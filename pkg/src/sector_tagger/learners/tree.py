"""Greedy CART trees on sparse, column-presorted data.

Split search works on the list of non-zero entries sorted by (column,
value).  Implicit zeros of a column are folded into one pseudo-entry at
their sorted position, so a node costs time proportional to its non-zeros
rather than to ``n_rows * n_features``.  Children inherit their parent's
entry list filtered by membership, which keeps it sorted for free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._kernels import apply_csr, column_segments, partition, scan_splits

TIE_RTOL = 1e-12
# a split must remove at least this fraction of the node's impurity mass
MIN_DECREASE_FRACTION = 1e-10


def gini(pos: float, neg: float) -> float:
    total = pos + neg
    if total <= 0:
        raise ValueError("gini of an empty node")
    p = pos / total
    return 2.0 * p * (1.0 - p)


def as_csc(X) -> sp.csc_matrix:
    if sp.issparse(X):
        X = sp.csc_matrix(X, dtype=np.float64, copy=True)
    else:
        X = sp.csc_matrix(np.asarray(X, dtype=np.float64))
    X.eliminate_zeros()
    return X


def as_csr(X) -> sp.csr_matrix:
    """CSR float matrix with sorted column indices, as tree traversal expects."""
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
        X = sp.csr_matrix(X)
    if not X.has_sorted_indices:
        X = X.sorted_indices()
    return X


class ColumnIndex:
    """Non-zero entries of a matrix sorted by (column, value)."""

    def __init__(self, X):
        if not sp.issparse(X):
            self._from_dense(np.asarray(X, dtype=np.float64))
            return
        X = as_csc(X)
        self.n_rows, self.n_features = X.shape
        if not np.all(np.isfinite(X.data)):
            raise ValueError("feature matrix contains non-finite values")
        cols = np.repeat(np.arange(self.n_features), np.diff(X.indptr))
        order = np.lexsort((X.data, cols))
        self.rows = X.indices[order].astype(np.int64)
        self.cols = cols[order]
        self.vals = X.data[order]

    def _from_dense(self, X: np.ndarray) -> None:
        if X.ndim != 2:
            raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("feature matrix contains non-finite values")
        self.n_rows, self.n_features = X.shape
        cols, rows = np.nonzero(X.T)
        vals = X[rows, cols]
        order = np.lexsort((vals, cols))
        self.rows = rows[order].astype(np.int64)
        self.cols = cols[order]
        self.vals = vals[order]


@dataclass
class DecisionTree:
    """Flat array representation; node 0 is the root, children in preorder."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_samples: np.ndarray
    impurity: np.ndarray
    value: np.ndarray
    n_features: int

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def used_features(self) -> np.ndarray:
        return np.unique(self.feature[self.feature >= 0])

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = as_csr(X)
        check_dimension(X, self.n_features)
        return apply_csr(X.indptr, X.indices, X.data, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "n_samples": self.n_samples.tolist(),
            "impurity": self.impurity.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            n_samples=np.array(d["n_samples"], dtype=np.float64),
            impurity=np.array(d["impurity"], dtype=np.float64),
            value=np.array(d["value"], dtype=np.float64),
            n_features=int(d["n_features"]),
        )


def check_dimension(X, n_features: int) -> None:
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} feature columns, got shape {X.shape}")


@dataclass
class _Grown:
    tree: DecisionTree
    leaf_of_row: np.ndarray


def grow_tree(
    index: ColumnIndex,
    target: np.ndarray,
    weight: np.ndarray,
    criterion: str = "gini",
    max_depth: int | None = None,
    min_samples_leaf: float = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> _Grown:
    """Grow one tree.

    ``criterion`` is ``"gini"`` for 0/1 targets or ``"mse"`` for real ones.
    Rows with zero weight are ignored (bootstrap out-of-bag rows).  Sample
    counts are weighted, so integer weights behave like duplicated rows.
    Ties between equally good splits go to the lowest feature index, then
    the lowest threshold.
    """
    if criterion not in ("gini", "mse"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if max_features is not None and rng is None:
        raise ValueError("feature subsampling needs a random generator")
    n = index.n_rows
    target = np.asarray(target, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    wt = weight * target
    wt2 = wt * target
    depth_limit = np.inf if max_depth is None else max_depth
    go_left = np.zeros(n, dtype=bool)
    use_col = np.zeros(index.n_features, dtype=bool)

    feature, threshold, left, right = [], [], [], []
    n_samples, impurity, value = [], [], []
    leaf_of_row = np.full(n, -1, dtype=np.int64)

    rows0 = np.flatnonzero(weight > 0)
    if rows0.size == 0:
        raise ValueError("cannot grow a tree without positively weighted rows")
    emask = weight[index.rows] > 0
    stack = [(rows0, index.rows[emask], index.cols[emask], index.vals[emask], 0, -1, False)]
    while stack:
        rows, e_rows, e_cols, e_vals, depth, parent, is_right = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node_id
        W = weight[rows].sum()
        S = wt[rows].sum()
        if criterion == "gini":
            imp = 2.0 * (S / W) * (1.0 - S / W)
        else:
            imp = max(wt2[rows].sum() / W - (S / W) ** 2, 0.0)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n_samples.append(W)
        impurity.append(imp)
        value.append(S / W)

        split = None
        if depth < depth_limit and W >= 2 * min_samples_leaf and imp > 0.0:
            split = _best_split(
                rows, e_rows, e_cols, e_vals, weight, wt, W, S, imp, criterion, min_samples_leaf, max_features, rng, use_col
            )
        if split is None:
            leaf_of_row[rows] = node_id
            continue
        f, thr = split
        feature[node_id] = f
        threshold[node_id] = thr
        lrows, rrows, l_er, l_ec, l_ev, r_er, r_ec, r_ev = partition(rows, e_rows, e_cols, e_vals, f, thr, go_left)
        stack.append((rrows, r_er, r_ec, r_ev, depth + 1, node_id, True))
        stack.append((lrows, l_er, l_ec, l_ev, depth + 1, node_id, False))

    tree = DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        n_samples=np.array(n_samples, dtype=np.float64),
        impurity=np.array(impurity, dtype=np.float64),
        value=np.array(value, dtype=np.float64),
        n_features=index.n_features,
    )
    return _Grown(tree, leaf_of_row)


def _best_split(rows, e_rows, e_cols, e_vals, weight, wt, W, S, imp, criterion, min_leaf, max_features, rng, use_col):
    if e_rows.size == 0:
        return None
    starts, varies = column_segments(e_cols, e_vals, len(rows))
    if not varies.any():
        return None
    candidates = e_cols[starts[:-1][varies]]
    if max_features is not None and len(candidates) > max_features:
        candidates = np.sort(rng.choice(candidates, size=max_features, replace=False))
    use_col[candidates] = True
    try:
        gain, col, thr = scan_splits(
            e_rows,
            e_cols,
            e_vals,
            weight,
            wt,
            starts,
            use_col,
            len(rows),
            W,
            S,
            0 if criterion == "gini" else 1,
            float(min_leaf),
            TIE_RTOL,
        )
    finally:
        use_col[candidates] = False
    if col < 0 or gain <= MIN_DECREASE_FRACTION * W * imp:
        return None
    return int(col), float(thr)


def fit_tree(
    X,
    y,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    seed: int | np.random.Generator | None = None,
    sample_weight=None,
) -> DecisionTree:
    """Greedy binary classification tree with Gini splitting; leaves hold class-1 proportions."""
    y = np.asarray(y)
    index = ColumnIndex(X)
    if len(y) != index.n_rows:
        raise ValueError("X and y disagree on the number of samples")
    if len(y) < 2 * min_samples_leaf:
        raise ValueError("need at least 2 * min_samples_leaf samples")
    weight = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    rng = np.random.default_rng(seed) if max_features is not None else None
    return grow_tree(index, y, weight, "gini", max_depth, min_samples_leaf, max_features, rng).tree
