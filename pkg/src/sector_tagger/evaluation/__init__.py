"""Fold assignment, CV metrics, significance tests and report tables.

The CV harness itself lives in :mod:`sector_tagger.evaluation.cv`.
"""

from .folds import FoldAssignment, stratified_folds
from .metrics import (
    ErrorBreakdown,
    FScore,
    PooledScores,
    RocCurve,
    confusion,
    cv_roc,
    error_analysis,
    f_score,
    pair_auc,
    roc_curve,
)
from .wilcoxon import WilcoxonResult, wilcoxon_signed_rank

__all__ = [
    "ErrorBreakdown",
    "FScore",
    "FoldAssignment",
    "PooledScores",
    "RocCurve",
    "WilcoxonResult",
    "confusion",
    "cv_roc",
    "error_analysis",
    "f_score",
    "pair_auc",
    "roc_curve",
    "stratified_folds",
    "wilcoxon_signed_rank",
]
