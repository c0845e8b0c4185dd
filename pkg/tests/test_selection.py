from __future__ import annotations

import csv
import io
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sector_tagger.corpus import filter_for_training, sector_labels
from sector_tagger.evaluation.folds import stratified_folds
from sector_tagger.features import build_feature_space, vectorize_many
from sector_tagger.learners import make_params
from sector_tagger.selection import (
    RANKER_LEARNER,
    RANKERS,
    SelectionError,
    SelectionParams,
    find_optimal_threshold,
    inner_cv_auc,
    integrate,
    load_selected,
    quantile_grid,
    rank_features,
    ranked_from_scores,
    save_selected,
    select_features,
    selected_csv,
)
from sector_tagger.textprep import load_stopwords, preprocess, stem_word

FAST = {"lr": {}, "rf": {"n_trees": 10}, "gbm": {"n_stages": 15}}


def fast_params(algorithm):
    learner = RANKER_LEARNER[algorithm]
    return make_params(learner, FAST[learner])


def with_threshold(scores, threshold, name="a"):
    return replace(ranked_from_scores(name, scores), threshold=threshold)


@pytest.fixture(scope="module")
def planted(small_synth):
    stops = load_stopwords()
    arts = filter_for_training(small_synth.articles)
    toks = [preprocess(a, stops) for a in arts]
    space = build_feature_space(arts, toks, small_synth.taxonomy)
    X = vectorize_many(arts, toks, space)
    names = space.feature_names
    signal = {s: {names.index(w) for w in map(stem_word, vocab) if w in names} for s, vocab in small_synth.planted.items()}
    return X, arts, space, signal


@pytest.fixture(scope="module")
def signal_fixture():
    """200 features; the label depends on the first 20 only."""
    rng = np.random.default_rng(0)
    X = rng.random((600, 200))
    w = np.zeros(200)
    w[:20] = rng.choice([-1, 1], 20) * rng.uniform(1, 2, 20)
    y = ((X - 0.5) @ w + rng.normal(0, 0.5, 600) > 0).astype(float)
    return X, y


# --- ranking ---------------------------------------------------------------


@pytest.mark.parametrize("algorithm", RANKERS)
def test_planted_features_lead_every_ranking(planted, algorithm):
    X, arts, _, signal = planted
    y = sector_labels(arts, "health")
    r = rank_features(algorithm, X, y, fast_params(algorithm), seed=1)
    assert set(r.columns[:10].tolist()) & signal["health"]


@pytest.mark.parametrize("algorithm", RANKERS)
def test_constant_feature_scores_zero(algorithm):
    rng = np.random.default_rng(2)
    X = rng.random((60, 4))
    X[:, 1] = 0.0
    y = (X[:, 0] > 0.5).astype(float)
    r = rank_features(algorithm, X, y, fast_params(algorithm), seed=0)
    assert r.score_of()[1] == 0.0


@pytest.mark.parametrize("algorithm", RANKERS)
def test_ranking_is_deterministic(planted, algorithm):
    X, arts, _, _ = planted
    y = sector_labels(arts, "energy")
    a = rank_features(algorithm, X, y, fast_params(algorithm), seed=4)
    b = rank_features(algorithm, X, y, fast_params(algorithm), seed=4)
    assert np.array_equal(a.columns, b.columns) and np.array_equal(a.scores, b.scores)


def test_unknown_ranker():
    with pytest.raises(SelectionError):
        rank_features("svm-weights", np.eye(2), [0, 1])


scores_st = st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0, 2.0]), min_size=1, max_size=12)


@given(scores_st, st.floats(0, 2), st.floats(0, 2))
def test_ranking_order_and_prefix_property(scores, ta, tb):
    r = ranked_from_scores("a", scores)
    assert np.all(np.diff(r.scores) <= 0)
    lo, hi = sorted((ta, tb))
    assert r.top_set(lo).size >= r.top_set(hi).size
    top = r.top_set(lo)
    # a prefix of the ranking
    assert set(top.tolist()) == set(r.columns[: top.size].tolist())
    assert all(scores[c] > lo for c in top)


def test_quantile_grid_ignores_zero_scores():
    r = ranked_from_scores("a", [0.0, 0.0, 1.0, 2.0, 3.0])
    assert quantile_grid(r, (0.0, 0.5, 1.0)) == [1.0, 2.0, 3.0]
    assert quantile_grid(ranked_from_scores("a", [0.0, 0.0])) == []


# --- threshold search ------------------------------------------------------


def test_single_zero_threshold_keeps_every_positive_feature(signal_fixture):
    X, y = signal_fixture
    r = rank_features("logistic-abs-coef", X[:, :8], y)
    chosen = find_optimal_threshold(r, X[:, :8], y, [0.0])
    assert chosen.threshold == 0.0
    assert chosen.top_set().tolist() == sorted(np.flatnonzero(r.score_of() > 0).tolist())


@pytest.mark.parametrize("algorithm", ["logistic-abs-coef", "gbm-mdi", "random-forest-mdi"])
def test_planted_signal_gives_a_small_good_set(signal_fixture, algorithm):
    X, y = signal_fixture
    lp = make_params(RANKER_LEARNER[algorithm], {"n_trees": 25} if algorithm == "random-forest-mdi" else
                     {"n_stages": 30} if algorithm == "gbm-mdi" else {})
    ranked = rank_features(algorithm, X, y, lp, seed=1)
    r = find_optimal_threshold(ranked, X, y, quantile_grid(ranked), 3, lp, seed=2)
    folds = stratified_folds(y, 3, np.random.SeedSequence([2]).generate_state(1)[0])
    full = inner_cv_auc(X, y, RANKER_LEARNER[algorithm], lp, folds, [2])
    best = next(t for t in r.trials if t.threshold == r.threshold)
    assert best.mean_auc >= full - 0.01
    assert r.top_set().size <= 0.25 * X.shape[1]


def test_ties_go_to_the_sparser_set(monkeypatch):
    import sector_tagger.selection as sel

    monkeypatch.setattr(sel, "inner_cv_auc", lambda *a, **k: 0.8)
    r = ranked_from_scores("logistic-abs-coef", [3.0, 2.0, 1.0])
    chosen = find_optimal_threshold(r, np.eye(3), np.array([0, 1, 1]), [0.5, 1.5, 2.5])
    assert chosen.threshold == 2.5 and chosen.top_set().tolist() == [0]


def test_empty_sets_are_skipped_and_all_empty_is_an_error():
    rng = np.random.default_rng(0)
    X = rng.random((40, 3))
    y = (X[:, 0] > 0.5).astype(float)
    r = ranked_from_scores("logistic-abs-coef", [1.0, 0.5, 0.0])
    chosen = find_optimal_threshold(r, X, y, [0.25, 5.0])
    assert chosen.threshold == 0.25
    assert [t.mean_auc is None for t in chosen.trials] == [False, True]
    with pytest.raises(SelectionError, match="empty"):
        find_optimal_threshold(r, X, y, [5.0, 6.0])
    with pytest.raises(SelectionError, match="empty threshold grid"):
        find_optimal_threshold(r, X, y, [])


# --- integration -----------------------------------------------------------


def test_union_and_provenance():
    a = with_threshold([1.0, 1.0, 0.0, 0.0], 0.5, "a")
    b = with_threshold([0.0, 1.0, 1.0, 0.0], 0.5, "b")
    sel = integrate([a, b], "health")
    assert sel.integrated.tolist() == [0, 1, 2]
    assert sel.provenance[1] == ("a", "b") and sel.provenance[0] == ("a",)
    assert sel.overlap[0, 1] == pytest.approx(100 / 3)


def test_identical_and_disjoint_lists():
    a = with_threshold([1.0, 1.0, 0.0, 0.0], 0.5, "a")
    same = integrate([a, with_threshold([1.0, 1.0, 0.0, 0.0], 0.5, "b")])
    assert same.integrated.tolist() == [0, 1] and same.overlap[0, 1] == 100.0
    apart = integrate([a, with_threshold([0.0, 0.0, 1.0, 1.0], 0.5, "b")])
    assert apart.integrated.size == 4 and apart.overlap[0, 1] == 0.0


def test_mismatched_spaces_are_rejected():
    with pytest.raises(SelectionError, match="different feature spaces"):
        integrate([with_threshold([1.0], 0.0), with_threshold([1.0, 2.0], 0.0)])


six_scores = st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0, 2.0]), min_size=6, max_size=6)


@given(st.lists(st.tuples(six_scores, st.floats(0, 1.5)), min_size=1, max_size=4))
def test_union_dominance(pairs):
    lists = [with_threshold(s, t, f"r{i}") for i, (s, t) in enumerate(pairs)]
    sel = integrate(lists)
    for r in lists:
        assert set(r.top_set().tolist()) <= set(sel.integrated.tolist())
    assert set(sel.provenance) == set(sel.integrated.tolist())
    assert all(sel.provenance.values())
    assert np.allclose(sel.overlap, sel.overlap.T)


# --- end to end and persistence --------------------------------------------


@pytest.fixture(scope="module")
def health_selection(planted):
    X, arts, space, _ = planted
    y = sector_labels(arts, "health")
    params = SelectionParams(learner_params={k: make_params(k, v) for k, v in FAST.items()})
    return select_features(X, y, "health", params, seed=5), space


def test_selection_finds_planted_features(health_selection, planted):
    sel, _ = health_selection
    assert set(sel.integrated.tolist()) & planted[3]["health"]
    assert sel.algorithms == RANKERS


def test_restricted_space_commutes_with_masking(health_selection, planted):
    sel, space = health_selection
    X, arts, _, _ = planted
    stops = load_stopwords()
    toks = [preprocess(a, stops) for a in arts]
    restricted = vectorize_many(arts, toks, space.restrict(sel.integrated))
    assert np.array_equal(restricted.toarray(), X.toarray()[:, sel.integrated])


def test_persisted_form_and_csv(tmp_path, health_selection):
    sel, space = health_selection
    path = tmp_path / "sel" / "health.json"
    save_selected(sel, space, path)
    data = load_selected(path)
    names = space.feature_names
    assert data["integrated"] == [names[c] for c in sel.integrated]
    assert len(data["per_algorithm"]) == 4
    rows = list(csv.reader(io.StringIO(selected_csv(data))))
    assert rows[0] == ["feature", "kind", "score", "algorithms"]
    assert {r[0] for r in rows[1:]} == set(data["integrated"])
    scores = [float(r[2]) for r in rows[1:]]
    assert scores == sorted(scores, reverse=True) and all(0 < s <= 1 for s in scores)


def test_loading_rejects_other_json(tmp_path):
    (tmp_path / "x.json").write_text("{}")
    with pytest.raises(SelectionError):
        load_selected(tmp_path / "x.json")


@pytest.mark.parametrize("changes", [{"rankers": ("nope",)}, {"quantiles": ()}, {"inner_folds": 1}])
def test_invalid_selection_params(changes):
    with pytest.raises(SelectionError):
        SelectionParams(**changes)
