"""Stratified fold assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FoldAssignment:
    """``fold[i]`` is the 0-based fold of row ``i``."""

    k: int
    fold: np.ndarray
    seed: int
    warning: str | None = None

    def train_test(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.fold == j
        return np.flatnonzero(~test), np.flatnonzero(test)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold, minlength=self.k)

    def positives(self, y) -> np.ndarray:
        return np.bincount(self.fold, weights=np.asarray(y, dtype=float), minlength=self.k).astype(np.int64)


def stratified_folds(y, k: int, seed: int) -> FoldAssignment:
    """Shuffle positives and negatives separately, then deal them to folds in turn.

    Negatives continue the deal where positives stopped, so both the fold
    sizes and the per-fold positive counts differ by at most one.
    """
    y = np.asarray(y)
    n = len(y)
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    pos = rng.permutation(np.flatnonzero(y == 1))
    neg = rng.permutation(np.flatnonzero(y != 1))
    order = np.concatenate([pos, neg])
    fold = np.empty(n, dtype=np.int64)
    fold[order] = np.arange(n) % k
    warning = None
    if len(pos) < k:
        warning = f"only {len(pos)} positives for {k} folds; some folds have none"
    return FoldAssignment(k, fold, seed, warning)
