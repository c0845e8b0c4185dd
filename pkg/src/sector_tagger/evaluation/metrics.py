"""Pooled cross-validation scores, ROC/AUC, F-score and error breakdown."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

DEFAULT_THRESHOLD = 0.5
DEFAULT_GREY = (0.4, 0.6)


@dataclass(frozen=True)
class PooledScores:
    """Every article's held-out score, produced by the model that never saw its fold."""

    ids: tuple[str, ...]
    fold: np.ndarray
    y: np.ndarray
    score: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        if not (len(self.fold) == len(self.y) == len(self.score) == n):
            raise ValueError("pooled score columns differ in length")

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.y == 0))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["id", "fold", "label", "score"])
        for i, f, y, s in zip(self.ids, self.fold, self.y, self.score):
            w.writerow([i, int(f), int(y), repr(float(s))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PooledScores":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            tuple(r["id"] for r in rows),
            np.array([int(r["fold"]) for r in rows], dtype=np.int64),
            np.array([int(r["label"]) for r in rows], dtype=np.int64),
            np.array([float(r["score"]) for r in rows]),
        )


@dataclass(frozen=True)
class RocCurve:
    """ROC points from the top threshold down; the first point is (0, 0) at t = +inf."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
            w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])
        return out.getvalue()


def roc_curve(y, score) -> RocCurve:
    """TPR(t) and FPR(t) count scores >= t, at every distinct score t.

    The area is accumulated in integer pair counts and divided once, so it
    matches the Mann-Whitney statistic exactly up to a single rounding.
    """
    y = np.asarray(y)
    score = np.asarray(score, dtype=np.float64)
    n1 = int(np.sum(y == 1))
    n0 = int(np.sum(y == 0))
    if n1 == 0 or n0 == 0:
        raise ValueError("ROC needs both positive and negative labels")
    thresholds, inverse = np.unique(score, return_inverse=True)
    pos_at = np.bincount(inverse, weights=(y == 1), minlength=len(thresholds)).astype(np.int64)[::-1]
    neg_at = np.bincount(inverse, weights=(y == 0), minlength=len(thresholds)).astype(np.int64)[::-1]
    tp = np.concatenate([[0], np.cumsum(pos_at)])
    fp = np.concatenate([[0], np.cumsum(neg_at)])
    # twice the area in units of (one positive) x (one negative)
    twice_area = int(np.sum(neg_at * (tp[1:] + tp[:-1])))
    auc = twice_area / (2 * n1 * n0)
    t = np.concatenate([[np.inf], thresholds[::-1]])
    return RocCurve(t, fp / n0, tp / n1, auc)


def cv_roc(pooled: PooledScores) -> RocCurve:
    return roc_curve(pooled.y, pooled.score)


def pair_auc(y, score) -> float:
    """Fraction of positive-negative pairs ranked correctly, ties counting one half."""
    y = np.asarray(y)
    score = np.asarray(score, dtype=np.float64)
    pos = score[y == 1]
    neg = score[y == 0]
    greater = np.sum(pos[:, None] > neg[None, :])
    ties = np.sum(pos[:, None] == neg[None, :])
    return (greater + 0.5 * ties) / (len(pos) * len(neg))


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int


def confusion(y, score, threshold: float = DEFAULT_THRESHOLD) -> Confusion:
    y = np.asarray(y)
    pred = np.asarray(score) >= threshold
    return Confusion(
        tp=int(np.sum(pred & (y == 1))),
        fp=int(np.sum(pred & (y == 0))),
        fn=int(np.sum(~pred & (y == 1))),
        tn=int(np.sum(~pred & (y == 0))),
    )


@dataclass(frozen=True)
class FScore:
    value: float
    precision: float
    recall: float
    undefined: bool


def f_from_confusion(c: Confusion, beta: float = 1.0) -> FScore:
    """F-beta; an undefined precision or recall yields 0 with ``undefined`` set."""
    if c.tp + c.fp == 0 or c.tp + c.fn == 0:
        precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
        recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
        return FScore(0.0, precision, recall, True)
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    if precision + recall == 0:
        return FScore(0.0, precision, recall, False)
    b2 = beta * beta
    return FScore((1 + b2) * precision * recall / (b2 * precision + recall), precision, recall, False)


def f_score(pooled: PooledScores, threshold: float = DEFAULT_THRESHOLD, beta: float = 1.0) -> FScore:
    if not 0.0 < threshold < 1.0:
        raise ValueError("decision threshold must lie strictly between 0 and 1")
    return f_from_confusion(confusion(pooled.y, pooled.score, threshold), beta)


@dataclass(frozen=True)
class ErrorCase:
    id: str
    label: int
    score: float
    kind: str
    grey_zone: bool


@dataclass(frozen=True)
class ErrorBreakdown:
    false_negatives: int
    false_positives: int
    grey_zone_count: int
    errors: tuple[ErrorCase, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "false_negatives": self.false_negatives,
            "false_positives": self.false_positives,
            "grey_zone_count": self.grey_zone_count,
        }


def in_grey_zone(score, grey: tuple[float, float] = DEFAULT_GREY):
    return (grey[0] <= score) & (score <= grey[1])


def error_analysis(
    pooled: PooledScores, threshold: float = DEFAULT_THRESHOLD, grey: tuple[float, float] = DEFAULT_GREY
) -> ErrorBreakdown:
    """Misclassifications at ``threshold``; ``grey_zone_count`` counts errors scored inside ``grey``."""
    lo, hi = grey
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"grey zone must be a sub-interval of [0, 1], got {grey}")
    y = np.asarray(pooled.y)
    s = np.asarray(pooled.score)
    fn = (y == 1) & (s < threshold)
    fp = (y == 0) & (s >= threshold)
    grey_mask = in_grey_zone(s, grey)
    errors = tuple(
        ErrorCase(pooled.ids[i], int(y[i]), float(s[i]), "false_negative" if fn[i] else "false_positive", bool(grey_mask[i]))
        for i in np.flatnonzero(fn | fp)
    )
    return ErrorBreakdown(int(fn.sum()), int(fp.sum()), int(np.sum((fn | fp) & grey_mask)), errors)


def errors_csv(breakdown: ErrorBreakdown) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["id", "label", "score", "kind", "grey_zone"])
    for e in breakdown.errors:
        w.writerow([e.id, e.label, repr(e.score), e.kind, int(e.grey_zone)])
    return out.getvalue()
