"""Stratified cross-validation with in-loop feature-space construction and selection."""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..corpus import Article, TopicTaxonomy, sector_labels
from ..features import FeatureSpace, TermCounts
from ..learners import fit_model, make_params, predict_proba
from ..selection import SelectedFeatures, SelectionParams, select_features
from ..textprep import load_stopwords, preprocess
from .folds import FoldAssignment, stratified_folds
from .metrics import DEFAULT_GREY, DEFAULT_THRESHOLD, ErrorBreakdown, PooledScores, cv_roc, error_analysis, f_score
from .wilcoxon import wilcoxon_signed_rank

log = logging.getLogger(__name__)

FEATURE_MODES = ("full", "selected")
# p-values above this mean "indistinguishable from the best"
INDISTINGUISHABLE_P = 0.001


@dataclass(frozen=True)
class FeatureParams:
    weighting: str = "tf_idf"
    min_df: int = 2
    propagate_topics: bool = True


@dataclass(frozen=True)
class CvParams:
    folds: int = 10
    threshold: float = DEFAULT_THRESHOLD
    grey: tuple[float, float] = DEFAULT_GREY
    f_beta: float = 1.0
    features: FeatureParams = field(default_factory=FeatureParams)
    learners: dict = field(default_factory=dict)
    selection: SelectionParams = field(default_factory=SelectionParams)

    def learner_params(self, algorithm: str):
        return self.learners.get(algorithm) or make_params(algorithm)


@dataclass
class PreparedCorpus:
    """Articles plus their token streams and corpus-wide stem counts."""

    articles: list[Article]
    tokens: list[list[str]]
    taxonomy: TopicTaxonomy
    counts: TermCounts

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.articles)

    def labels(self, sector: str) -> np.ndarray:
        return sector_labels(self.articles, sector)

    def subset(self, rows) -> "PreparedCorpus":
        rows = list(rows)
        return prepare_tokens([self.articles[i] for i in rows], [self.tokens[i] for i in rows], self.taxonomy)


def prepare_tokens(articles, tokens, taxonomy: TopicTaxonomy) -> PreparedCorpus:
    return PreparedCorpus(list(articles), list(tokens), taxonomy, TermCounts(articles, tokens))


def prepare_corpus(articles, taxonomy: TopicTaxonomy, stops: frozenset[str] | None = None) -> PreparedCorpus:
    stops = load_stopwords() if stops is None else stops
    return prepare_tokens(articles, [preprocess(a, stops) for a in articles], taxonomy)


@dataclass(frozen=True)
class FoldRecord:
    fold: int
    n_train: int
    n_test: int
    skipped: bool
    n_features: int = 0
    train_digest: str = ""
    times: dict = field(default_factory=dict, compare=False)

    def to_dict(self, include_times: bool = False) -> dict:
        d = {
            "fold": self.fold,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "skipped": self.skipped,
            "n_features": self.n_features,
            "train_digest": self.train_digest,
        }
        if include_times:
            d["times"] = dict(self.times)
        return d


@dataclass(frozen=True)
class CvReport:
    sector: str
    algorithm: str
    feature_mode: str
    auc: float
    f_score: float
    f_undefined: bool
    n_pos: int
    n_neg: int
    folds: tuple[FoldRecord, ...]
    errors: ErrorBreakdown
    warnings: tuple[str, ...] = ()

    def stage_time(self, stage: str) -> float:
        return float(sum(f.times.get(stage, 0.0) for f in self.folds))

    def to_dict(self, include_times: bool = False) -> dict:
        return {
            "sector": self.sector,
            "algorithm": self.algorithm,
            "feature_mode": self.feature_mode,
            "auc": self.auc,
            "f_score": self.f_score,
            "f_undefined": self.f_undefined,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "errors": self.errors.to_dict(),
            "warnings": list(self.warnings),
            "folds": [f.to_dict(include_times) for f in self.folds],
        }


def training_inputs(
    prepared: PreparedCorpus, train: np.ndarray, y: np.ndarray, features: FeatureParams
) -> tuple[FeatureSpace, sp.csr_matrix, np.ndarray]:
    """Feature space and matrix built from the training rows alone."""
    space = prepared.counts.space_for(
        train, prepared.taxonomy, features.weighting, features.min_df, features.propagate_topics
    )
    return space, prepared.counts.matrix(train, space), y[train]


def digest_inputs(space: FeatureSpace, X: sp.csr_matrix, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(space.digest().encode())
    X = sp.csr_matrix(X)
    for arr in (X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data, np.asarray(y, dtype=np.int64)):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def fold_seed(seed, *parts) -> tuple[int, ...]:
    return (*np.atleast_1d(seed).tolist(), *parts)


def run_cv(
    prepared: PreparedCorpus,
    sector: str,
    algorithm: str,
    feature_mode: str = "full",
    params: CvParams | None = None,
    seed: int = 0,
    folds: FoldAssignment | None = None,
    selection_cache: dict | None = None,
) -> tuple[PooledScores, CvReport]:
    """Score every article with a model trained without its fold.

    The feature space, and in ``"selected"`` mode the feature selection,
    see only the training folds.  ``selection_cache`` lets several
    algorithms share one selection per fold.
    """
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {feature_mode!r}")
    params = params or CvParams()
    lp = params.learner_params(algorithm)
    y = prepared.labels(sector)
    folds = folds or stratified_folds(y, params.folds, seed)
    warnings = [folds.warning] if folds.warning else []
    score = np.full(len(y), np.nan)
    records = []
    for j in range(folds.k):
        train, test = folds.train_test(j)
        ytr = y[train]
        if ytr.min() == ytr.max():
            msg = f"fold {j}: training rows hold a single class; fold skipped"
            log.warning("%s/%s: %s", sector, algorithm, msg)
            warnings.append(msg)
            records.append(FoldRecord(j, len(train), len(test), True))
            continue
        times = {}
        if feature_mode == "selected":
            key = (sector, folds.seed, folds.k, j)
            cached = selection_cache.get(key) if selection_cache is not None else None
            if cached is None:
                t0 = time.perf_counter()
                space_full, X_full, _ = training_inputs(prepared, train, y, params.features)
                sel = select_features(X_full, ytr, sector, params.selection, fold_seed(seed, j))
                cached = (space_full, sel, time.perf_counter() - t0)
                if selection_cache is not None:
                    selection_cache[key] = cached
            _, sel, times["selection"] = cached
            # the space is rebuilt so that timings compare like with like against full mode
            t0 = time.perf_counter()
            space = prepared.counts.space_for(
                train, prepared.taxonomy, params.features.weighting, params.features.min_df,
                params.features.propagate_topics,
            ).restrict(sel.integrated)
            Xtr = prepared.counts.matrix(train, space)
            times["vectorize"] = time.perf_counter() - t0
        else:
            t0 = time.perf_counter()
            space, Xtr, _ = training_inputs(prepared, train, y, params.features)
            times["vectorize"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        model = fit_model(algorithm, Xtr, ytr, lp, fold_seed(seed, j))
        times["train"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        score[test] = predict_proba(model, prepared.counts.matrix(test, space))
        times["predict"] = time.perf_counter() - t0
        records.append(FoldRecord(j, len(train), len(test), False, space.dimension, digest_inputs(space, Xtr, ytr), times))

    scored = np.flatnonzero(~np.isnan(score))
    ids = prepared.ids
    pooled = PooledScores(tuple(ids[i] for i in scored), folds.fold[scored], y[scored].astype(np.int64), score[scored])
    report = summarize(pooled, sector, algorithm, feature_mode, params, tuple(records), tuple(warnings))
    return pooled, report


def summarize(pooled, sector, algorithm, feature_mode, params: CvParams, records=(), warnings=()) -> CvReport:
    if pooled.n_pos and pooled.n_neg:
        auc = cv_roc(pooled).auc
    else:
        auc = float("nan")
        warnings = (*warnings, "pooled scores hold a single class; AUC undefined")
    f = f_score(pooled, params.threshold, params.f_beta)
    return CvReport(
        sector,
        algorithm,
        feature_mode,
        auc,
        f.value,
        f.undefined,
        pooled.n_pos,
        pooled.n_neg,
        tuple(records),
        error_analysis(pooled, params.threshold, params.grey),
        tuple(warnings),
    )


@dataclass(frozen=True)
class Comparison:
    """Per-resample scores of several algorithms on shared folds, with pairwise tests."""

    algorithms: tuple[str, ...]
    metric: str
    scores: np.ndarray
    p_values: np.ndarray

    @property
    def means(self) -> np.ndarray:
        return self.scores.mean(axis=0)

    @property
    def best(self) -> int:
        return int(np.argmax(self.means))

    def indistinguishable(self, alpha: float = INDISTINGUISHABLE_P) -> np.ndarray:
        """True for the best algorithm and any whose test against it gives p > alpha."""
        flags = self.p_values[self.best] > alpha
        flags[self.best] = True
        return flags

    def to_dict(self) -> dict:
        return {
            "algorithms": list(self.algorithms),
            "metric": self.metric,
            "means": self.means.tolist(),
            "p_values": self.p_values.tolist(),
            "indistinguishable": self.indistinguishable().tolist(),
            "scores": self.scores.tolist(),
        }


def pairwise_wilcoxon(scores: np.ndarray) -> np.ndarray:
    m = scores.shape[1]
    p = np.ones((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            p[a, b] = p[b, a] = wilcoxon_signed_rank(scores[:, a] - scores[:, b]).p_value
    return p


def compare(algorithms, scores: np.ndarray, metric: str) -> Comparison:
    scores = np.asarray(scores, dtype=np.float64)
    return Comparison(tuple(algorithms), metric, scores, pairwise_wilcoxon(scores))


def resample_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, r]).generate_state(1)[0])


def resampled_scores(
    prepared: PreparedCorpus,
    sector: str,
    algorithms,
    n_resamples: int,
    seed: int = 0,
    params: CvParams | None = None,
) -> dict[str, np.ndarray]:
    """AUC and F of each algorithm over ``n_resamples`` CV runs; resample r uses fold seed (seed, r)."""
    if len(algorithms) < 2:
        raise ValueError("comparison needs at least two algorithms")
    if n_resamples < 2:
        raise ValueError("comparison needs at least two resamples")
    params = params or CvParams()
    y = prepared.labels(sector)
    auc = np.zeros((n_resamples, len(algorithms)))
    fs = np.zeros_like(auc)
    for r in range(n_resamples):
        folds = stratified_folds(y, params.folds, resample_seed(seed, r + 1))
        for a, algorithm in enumerate(algorithms):
            _, rep = run_cv(prepared, sector, algorithm, "full", params, resample_seed(seed, r + 1), folds)
            auc[r, a] = rep.auc
            fs[r, a] = rep.f_score
    return {"auc": auc, "f_score": fs}


def resampled_comparison(
    prepared: PreparedCorpus,
    sector: str,
    algorithms,
    n_resamples: int,
    seed: int = 0,
    params: CvParams | None = None,
) -> dict[str, Comparison]:
    scores = resampled_scores(prepared, sector, algorithms, n_resamples, seed, params)
    return {metric: compare(algorithms, s, metric) for metric, s in scores.items()}
