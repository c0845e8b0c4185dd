"""Importance-threshold feature selection with a union across rankers.

Each ranker fits its learner on the training rows and orders features by
importance.  A grid of importance thresholds is scored by inner stratified
CV with the same learner; the best threshold's top set is kept, and the
top sets of all rankers are merged into one integrated list.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .evaluation.folds import stratified_folds
from .evaluation.metrics import roc_curve
from .features import FeatureSpace
from .learners import (
    GbmParams,
    LogisticParams,
    RandomForestParams,
    fit_model,
    importance_abs_coefficient,
    importance_mdi,
    importance_prediction_change,
    predict_proba,
)

RANKERS = ("gbm-mdi", "gbm-prediction-change", "random-forest-mdi", "logistic-abs-coef")
RANKER_LEARNER = {
    "gbm-mdi": "gbm",
    "gbm-prediction-change": "gbm",
    "random-forest-mdi": "rf",
    "logistic-abs-coef": "lr",
}
DEFAULT_QUANTILES = (0.5, 0.75, 0.9, 0.95, 0.99)
SELECTION_FORMAT = "sector-tagger/selected-features"
# mean inner AUCs closer than this count as tied
AUC_TIE = 1e-12


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionParams:
    rankers: tuple[str, ...] = RANKERS
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES
    inner_folds: int = 3
    learner_params: dict = field(
        default_factory=lambda: {
            "lr": LogisticParams(),
            "rf": RandomForestParams(n_trees=25),
            "gbm": GbmParams(n_stages=50),
        }
    )

    def __post_init__(self):
        unknown = [r for r in self.rankers if r not in RANKERS]
        if unknown or not self.rankers:
            raise SelectionError(f"unknown rankers {unknown}; expected a subset of {list(RANKERS)}")
        if not self.quantiles or not all(0.0 <= q <= 1.0 for q in self.quantiles):
            raise SelectionError("quantile grid must be non-empty with values in [0, 1]")
        if self.inner_folds < 2:
            raise SelectionError("inner CV needs at least 2 folds")


@dataclass(frozen=True)
class ThresholdTrial:
    threshold: float
    n_features: int
    mean_auc: float | None


@dataclass(frozen=True)
class RankedFeatureList:
    """Columns in decreasing importance (equal scores by column index)."""

    algorithm: str
    columns: np.ndarray
    scores: np.ndarray
    dimension: int
    threshold: float | None = None
    trials: tuple[ThresholdTrial, ...] = ()

    def top_set(self, threshold: float | None = None) -> np.ndarray:
        """Columns scoring strictly above the threshold, sorted by column index."""
        t = self.threshold if threshold is None else threshold
        if t is None:
            raise SelectionError(f"{self.algorithm}: no threshold chosen yet")
        return np.sort(self.columns[self.scores > t])

    def score_of(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[self.columns] = self.scores
        return out


@dataclass(frozen=True)
class SelectedFeatures:
    sector: str
    integrated: np.ndarray
    provenance: dict[int, tuple[str, ...]]
    per_algorithm: tuple[RankedFeatureList, ...]
    overlap: np.ndarray

    @property
    def algorithms(self) -> tuple[str, ...]:
        return tuple(r.algorithm for r in self.per_algorithm)


def ranked_from_scores(algorithm: str, scores) -> RankedFeatureList:
    scores = np.asarray(scores, dtype=np.float64)
    cols = np.arange(len(scores))
    order = np.lexsort((cols, -scores))
    return RankedFeatureList(algorithm, order, scores[order], len(scores))


def _importance(algorithm: str, model) -> np.ndarray:
    if algorithm == "gbm-prediction-change":
        return importance_prediction_change(model).scores
    if algorithm == "logistic-abs-coef":
        return importance_abs_coefficient(model).scores
    return importance_mdi(model).scores


def rank_features(algorithm: str, X, y, learner_params=None, seed=0, model=None) -> RankedFeatureList:
    """Fit the ranker's learner (unless ``model`` is given) and sort features by importance."""
    if algorithm not in RANKERS:
        raise SelectionError(f"unknown ranker {algorithm!r}; expected one of {list(RANKERS)}")
    if model is None:
        model = fit_model(RANKER_LEARNER[algorithm], X, y, learner_params, seed)
    return ranked_from_scores(algorithm, _importance(algorithm, model))


def quantile_grid(ranked: RankedFeatureList, quantiles=DEFAULT_QUANTILES) -> list[float]:
    positive = ranked.scores[ranked.scores > 0]
    if positive.size == 0:
        return []
    return sorted({float(v) for v in np.quantile(positive, quantiles)})


def _columns(X, cols: np.ndarray):
    return X[:, cols] if not sp.issparse(X) else sp.csc_matrix(X)[:, cols].tocsr()


def inner_cv_auc(X, y, learner: str, learner_params, folds, seed) -> float:
    aucs = []
    for j in range(folds.k):
        train, test = folds.train_test(j)
        if len(np.unique(y[train])) < 2 or len(np.unique(y[test])) < 2:
            continue
        model = fit_model(learner, X[train], y[train], learner_params, (*np.atleast_1d(seed).tolist(), j))
        aucs.append(roc_curve(y[test], predict_proba(model, X[test])).auc)
    if not aucs:
        raise SelectionError("no inner fold had both classes")
    return float(np.mean(aucs))


def find_optimal_threshold(
    ranked: RankedFeatureList,
    X,
    y,
    grid,
    inner_folds: int = 3,
    learner_params=None,
    seed=0,
) -> RankedFeatureList:
    """Pick the grid threshold whose top set has the best inner-CV mean AUC.

    Thresholds leaving no feature are skipped.  Equal AUCs go to the larger
    threshold, i.e. the smaller feature set.
    """
    grid = sorted(set(float(t) for t in grid))
    if not grid:
        raise SelectionError(f"{ranked.algorithm}: empty threshold grid")
    X = sp.csr_matrix(X) if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    inner_seed = np.atleast_1d(seed).tolist()
    folds = stratified_folds(y, inner_folds, np.random.SeedSequence(inner_seed).generate_state(1)[0])
    learner = RANKER_LEARNER[ranked.algorithm]
    trials = []
    best = None
    for t in grid:
        cols = ranked.top_set(t)
        if cols.size == 0:
            trials.append(ThresholdTrial(t, 0, None))
            continue
        auc = inner_cv_auc(_columns(X, cols), y, learner, learner_params, folds, inner_seed)
        trials.append(ThresholdTrial(t, int(cols.size), auc))
        if best is None or auc >= best[1] - AUC_TIE:
            best = (t, auc)
    if best is None:
        raise SelectionError(f"{ranked.algorithm}: every grid threshold leaves an empty feature set")
    return replace(ranked, threshold=best[0], trials=tuple(trials))


def integrate(lists, sector: str = "") -> SelectedFeatures:
    """Union of the rankers' top sets, with provenance and pairwise Jaccard overlap in percent."""
    lists = tuple(lists)
    if not lists:
        raise SelectionError("nothing to integrate")
    dims = {r.dimension for r in lists}
    if len(dims) != 1:
        raise SelectionError(f"rankings come from different feature spaces (dimensions {sorted(dims)})")
    tops = [set(r.top_set().tolist()) for r in lists]
    provenance: dict[int, tuple[str, ...]] = {}
    for col in sorted(set().union(*tops)):
        provenance[col] = tuple(r.algorithm for r, top in zip(lists, tops) if col in top)
    m = len(lists)
    overlap = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            union = tops[a] | tops[b]
            overlap[a, b] = 100.0 * len(tops[a] & tops[b]) / len(union) if union else 100.0
    return SelectedFeatures(sector, np.array(sorted(provenance), dtype=np.int64), provenance, lists, overlap)


def select_features(X, y, sector: str = "", params: SelectionParams | None = None, seed=0) -> SelectedFeatures:
    """Run every ranker on the training rows ``X, y`` and merge their top sets."""
    params = params or SelectionParams()
    y = np.asarray(y)
    models = {}
    ranked = []
    for k, algorithm in enumerate(params.rankers):
        learner = RANKER_LEARNER[algorithm]
        lp = params.learner_params.get(learner)
        if learner not in models:
            models[learner] = fit_model(learner, X, y, lp, (*np.atleast_1d(seed).tolist(), 1000 + k))
        r = rank_features(algorithm, X, y, model=models[learner])
        grid = quantile_grid(r, params.quantiles)
        if not grid:
            raise SelectionError(f"{algorithm}: every importance score is zero")
        ranked.append(find_optimal_threshold(r, X, y, grid, params.inner_folds, lp, (*np.atleast_1d(seed).tolist(), k)))
    return integrate(ranked, sector)


def _kind(name: str) -> str:
    return "topic" if name.startswith("topic:") else "word"


def relative_scores(sel: SelectedFeatures) -> dict[str, np.ndarray]:
    """Each ranker's scores divided by its top score, so measures share the scale [0, 1]."""
    rel = {}
    for r in sel.per_algorithm:
        top = r.scores[0] if r.scores.size and r.scores[0] > 0 else 1.0
        rel[r.algorithm] = r.score_of() / top
    return rel


def selected_to_dict(sel: SelectedFeatures, space: FeatureSpace) -> dict:
    names = space.feature_names
    if any(r.dimension != len(names) for r in sel.per_algorithm):
        raise SelectionError("selection and feature space disagree on dimension")
    rel = relative_scores(sel)
    return {
        "format": SELECTION_FORMAT,
        "version": 1,
        "sector": sel.sector,
        "integrated": [names[c] for c in sel.integrated],
        "provenance": {names[c]: list(algos) for c, algos in sel.provenance.items()},
        "relative_scores": {names[c]: {a: float(rel[a][c]) for a in algos} for c, algos in sel.provenance.items()},
        "per_algorithm": [
            {
                "algorithm": r.algorithm,
                "threshold": r.threshold,
                "n_selected": int(r.top_set().size),
                "trials": [
                    {"threshold": t.threshold, "n_features": t.n_features, "mean_auc": t.mean_auc} for t in r.trials
                ],
            }
            for r in sel.per_algorithm
        ],
        "overlap_percent": {
            "algorithms": list(sel.algorithms),
            "matrix": sel.overlap.tolist(),
        },
    }


def save_selected(sel: SelectedFeatures, space: FeatureSpace, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(selected_to_dict(sel, space), indent=2) + "\n", "utf-8")


def load_selected(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(data, dict) or data.get("format") != SELECTION_FORMAT:
        raise SelectionError(f"{path}: not a selected-features file")
    return data


def selected_csv(data: dict) -> str:
    """One row per integrated feature, from the persisted form.

    ``score`` is the largest relative importance among the rankers that
    selected the feature; rows run from the highest score down.
    """
    rows = []
    for name, algos in data["provenance"].items():
        score = max(data["relative_scores"][name][a] for a in algos)
        rows.append((-score, name, score, algos))
    rows.sort()
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["feature", "kind", "score", "algorithms"])
    for _, name, score, algos in rows:
        w.writerow([name, _kind(name), f"{score:.6f}", ";".join(algos)])
    return out.getvalue()
