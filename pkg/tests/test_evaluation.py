from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sector_tagger.corpus import filter_for_training
from sector_tagger.evaluation import (
    PooledScores,
    confusion,
    cv_roc,
    error_analysis,
    f_score,
    pair_auc,
    roc_curve,
    stratified_folds,
    wilcoxon_signed_rank,
)
from sector_tagger.evaluation.cv import (
    CvParams,
    compare,
    digest_inputs,
    prepare_corpus,
    resampled_comparison,
    run_cv,
    summarize,
    training_inputs,
)
from sector_tagger.evaluation.metrics import errors_csv
from sector_tagger.evaluation.reports import metric_block, metrics_csv, metrics_markdown, timing_markdown
from sector_tagger.learners import make_params
from sector_tagger.selection import SelectionParams

from .oracles import enumerate_wilcoxon_p, mann_whitney_auc


def pooled(y, score, ids=None):
    y = np.asarray(y)
    ids = ids or tuple(f"d{i}" for i in range(len(y)))
    return PooledScores(tuple(ids), np.zeros(len(y), dtype=int), y, np.asarray(score, dtype=float))


FAST = CvParams(
    folds=5,
    learners={"rf": make_params("rf", {"n_trees": 5}), "gbm": make_params("gbm", {"n_stages": 10})},
    selection=SelectionParams(
        inner_folds=2,
        learner_params={
            "lr": make_params("lr"),
            "rf": make_params("rf", {"n_trees": 5}),
            "gbm": make_params("gbm", {"n_stages": 10}),
        },
    ),
)


@pytest.fixture(scope="module")
def prepared(small_synth):
    return prepare_corpus(filter_for_training(small_synth.articles), small_synth.taxonomy)


# --- folds -----------------------------------------------------------------


def test_divisible_case_gives_identical_folds():
    y = np.array([1] * 30 + [0] * 70)
    folds = stratified_folds(y, 10, seed=1)
    assert folds.sizes().tolist() == [10] * 10
    assert folds.positives(y).tolist() == [3] * 10


def test_one_article_per_fold():
    y = np.array([1, 1, 1] + [0] * 7)
    folds = stratified_folds(y, 10, seed=4)
    assert folds.sizes().tolist() == [1] * 10
    assert int(np.sum(folds.positives(y) > 0)) == 3
    assert folds.warning is not None


def test_same_seed_same_folds():
    y = np.random.default_rng(0).integers(0, 2, 57)
    assert np.array_equal(stratified_folds(y, 7, 3).fold, stratified_folds(y, 7, 3).fold)


def test_too_many_or_too_few_folds():
    with pytest.raises(ValueError):
        stratified_folds([0, 1], 3, 0)
    with pytest.raises(ValueError):
        stratified_folds([0, 1, 0], 1, 0)


@given(st.integers(2, 12), st.lists(st.booleans(), min_size=12, max_size=80), st.integers(0, 2**32 - 1))
def test_fold_balance(k, labels, seed):
    y = np.array(labels, dtype=int)
    folds = stratified_folds(y, k, seed)
    sizes, pos = folds.sizes(), folds.positives(y)
    assert sizes.max() - sizes.min() <= 1
    assert pos.max() - pos.min() <= 1
    assert sizes.sum() == len(y)


# --- ROC and AUC -----------------------------------------------------------


@pytest.mark.parametrize(
    "pos, neg, auc",
    [([0.9, 0.8], [0.2, 0.1], 1.0), ([0.8, 0.3], [0.5, 0.2], 0.75), ([0.5], [0.5], 0.5)],
)
def test_auc_examples(pos, neg, auc):
    assert cv_roc(pooled([1] * len(pos) + [0] * len(neg), pos + neg)).auc == auc


def test_single_class_has_no_roc():
    with pytest.raises(ValueError):
        roc_curve([1, 1], [0.2, 0.3])


labelled_scores = st.integers(2, 200).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda y: 0 < sum(y) < len(y)),
        st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0]) | st.floats(0, 1), min_size=n, max_size=n),
    )
)


@given(labelled_scores)
def test_trapezoid_equals_pair_statistic(data):
    y, s = data
    curve = roc_curve(y, s)
    assert abs(curve.auc - mann_whitney_auc(y, s)) <= 1e-12
    assert abs(curve.auc - pair_auc(y, s)) <= 1e-12
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0) and (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert 0.0 <= curve.auc <= 1.0


@given(labelled_scores)
def test_monotone_transform_invariance(data):
    y, s = data
    # on a coarse grid the transform stays strictly increasing in floating point
    s = np.round(s, 3)
    a, b = roc_curve(y, s), roc_curve(y, np.exp(3 * s) - 7)
    assert a.auc == b.auc
    assert np.array_equal(a.fpr, b.fpr) and np.array_equal(a.tpr, b.tpr)


def test_roc_csv_has_one_row_per_point():
    text = roc_curve([1, 0, 1], [0.9, 0.4, 0.4]).to_csv().splitlines()
    assert text[0] == "threshold,fpr,tpr" and len(text) == 1 + 3


# --- F score and errors ----------------------------------------------------


def test_perfect_and_all_negative_predictions():
    assert f_score(pooled([1, 0, 1], [0.9, 0.1, 0.8])).value == 1.0
    f = f_score(pooled([1, 0, 1], [0.1, 0.1, 0.2]))
    assert f.value == 0.0 and f.undefined


def test_f_hand_arithmetic():
    # TP=3, FP=1, FN=2
    f = f_score(pooled([1, 1, 1, 0, 1, 1, 0], [0.9, 0.8, 0.7, 0.6, 0.3, 0.2, 0.1]))
    assert (f.precision, f.recall) == (0.75, 0.6)
    assert f.value == pytest.approx(2 / 3)


def test_threshold_must_be_inside_the_unit_interval():
    with pytest.raises(ValueError):
        f_score(pooled([1, 0], [0.9, 0.1]), threshold=1.0)


def test_single_error_in_the_grey_zone():
    b = error_analysis(pooled([1], [0.45]), 0.5, (0.4, 0.6))
    assert (b.false_negatives, b.false_positives, b.grey_zone_count) == (1, 0, 1)
    assert b.errors[0].kind == "false_negative" and b.errors[0].grey_zone


def test_no_errors_no_counts():
    b = error_analysis(pooled([1, 0], [0.9, 0.1]))
    assert b.to_dict() == {"false_negatives": 0, "false_positives": 0, "grey_zone_count": 0}


def test_ten_article_hand_tally():
    y = [1, 1, 1, 1, 0, 0, 0, 0, 0, 1]
    s = [0.95, 0.55, 0.45, 0.05, 0.5, 0.62, 0.39, 0.1, 0.7, 0.4]
    # FN: 0.45 (grey), 0.05, 0.4 (grey edge); FP: 0.5 (grey), 0.62, 0.7
    b = error_analysis(pooled(y, s), 0.5, (0.4, 0.6))
    assert (b.false_negatives, b.false_positives, b.grey_zone_count) == (3, 3, 3)
    rows = errors_csv(b).splitlines()
    assert rows[0] == "id,label,score,kind,grey_zone" and len(rows) == 7


@given(labelled_scores, st.floats(0.01, 0.99))
def test_confusion_conservation(data, t):
    y, s = data
    c = confusion(y, s, t)
    b = error_analysis(pooled(y, s), t)
    wrong = sum((si >= t) != (yi == 1) for yi, si in zip(y, s))
    assert b.false_negatives + b.false_positives == wrong
    assert c.fn + c.tp == sum(y) and c.fp + c.tn == len(y) - sum(y)
    assert 0.0 <= f_score(pooled(y, s), t).value <= 1.0


# --- Wilcoxon --------------------------------------------------------------


def test_all_zero_differences_give_p_one():
    assert wilcoxon_signed_rank([0.0, 0.0, 0.0]).p_value == 1.0


def test_five_positive_differences():
    r = wilcoxon_signed_rank([1, 2, 3, 4, 5])
    assert r.statistic == 0 and r.p_value == 2 / 32


def test_empty_input_is_an_error():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([])


small_diffs = st.lists(st.sampled_from([-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0]), min_size=1, max_size=10)


@given(small_diffs)
def test_exact_p_matches_sign_enumeration(diffs):
    assert wilcoxon_signed_rank(diffs).p_value == pytest.approx(enumerate_wilcoxon_p(diffs), abs=1e-12)


def test_normal_approximation_is_close_in_the_tail_at_twelve():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 20:
        d = rng.permutation(np.arange(1, 13)) * rng.choice([-1, 1], 12, p=[0.2, 0.8])
        exact = wilcoxon_signed_rank(d, "exact").p_value
        if exact > 0.2:
            continue
        assert abs(exact - wilcoxon_signed_rank(d, "normal").p_value) < 0.01
        checked += 1


def test_method_switches_above_twelve():
    assert wilcoxon_signed_rank(np.arange(1, 13)).method == "exact"
    assert wilcoxon_signed_rank(np.arange(1, 14)).method == "normal"


def test_algorithm_against_itself_is_indistinguishable():
    scores = np.random.default_rng(1).random((6, 1))
    cmp_ = compare(["a", "b"], np.hstack([scores, scores]), "auc")
    assert cmp_.p_values[0, 1] == 1.0 and cmp_.indistinguishable().all()


def test_clearly_worse_algorithm_is_not_flagged():
    good = np.linspace(0.9, 0.95, 15)
    cmp_ = compare(["a", "b"], np.column_stack([good, good - 0.1]), "auc")
    assert cmp_.best == 0
    assert cmp_.indistinguishable().tolist() == [True, False]


# --- cross-validation harness ----------------------------------------------


def test_perfect_oracle_scores():
    rep = summarize(pooled([1, 0, 1, 0], [0.9, 0.2, 0.7, 0.1]), "health", "oracle", "full", CvParams())
    assert rep.auc == 1.0 and rep.f_score == 1.0


@pytest.mark.parametrize("algorithm", ["lr", "rf", "gbm"])
def test_every_article_scored_once(prepared, algorithm):
    pooled_, rep = run_cv(prepared, "financial", algorithm, "full", FAST, seed=2)
    assert sorted(pooled_.ids) == sorted(prepared.ids)
    assert pooled_.n_pos + pooled_.n_neg == len(prepared.ids)
    assert 0.0 <= rep.auc <= 1.0 and 0.0 <= rep.f_score <= 1.0
    assert rep.errors.false_negatives + rep.errors.false_positives == sum(
        (s >= 0.5) != (y == 1) for y, s in zip(pooled_.y, pooled_.score)
    )
    assert rep.auc > 0.8


def test_selected_mode_keeps_cardinality(prepared):
    full, _ = run_cv(prepared, "energy", "lr", "full", FAST, seed=3)
    sel, rep = run_cv(prepared, "energy", "lr", "selected", FAST, seed=3)
    assert sorted(sel.ids) == sorted(full.ids)
    assert all(0 < f.n_features for f in rep.folds)


def test_held_out_articles_do_not_reach_training(prepared):
    y = prepared.labels("technology")
    folds = stratified_folds(y, FAST.folds, 9)
    _, rep = run_cv(prepared, "technology", "lr", "full", FAST, seed=9, folds=folds)
    for j, record in enumerate(rep.folds):
        train, _ = folds.train_test(j)
        # the training rows alone, with the held-out fold gone
        only_train = prepared.subset(train)
        digest = digest_inputs(*training_inputs(only_train, np.arange(len(train)), y[train], FAST.features))
        assert record.train_digest == digest


def test_cv_is_deterministic(prepared):
    a_pooled, a = run_cv(prepared, "property", "rf", "full", FAST, seed=5)
    b_pooled, b = run_cv(prepared, "property", "rf", "full", FAST, seed=5)
    assert a_pooled.to_csv() == b_pooled.to_csv()
    assert a.to_dict() == b.to_dict()


def test_single_class_training_fold_is_skipped(prepared):
    y = prepared.labels("insurance")
    keep = list(np.flatnonzero(y == 0)[:40]) + [int(np.flatnonzero(y == 1)[0])]
    tiny = prepared.subset(sorted(keep))
    pooled_, rep = run_cv(tiny, "insurance", "lr", "full", FAST, seed=0)
    assert sum(f.skipped for f in rep.folds) == 1
    assert any("skipped" in w for w in rep.warnings)
    assert len(pooled_.ids) < len(tiny.ids)


def test_unknown_feature_mode(prepared):
    with pytest.raises(ValueError):
        run_cv(prepared, "health", "lr", "both", FAST)


def test_resampled_comparison_shapes(prepared):
    out = resampled_comparison(prepared, "health", ["lr", "gbm"], 2, seed=1, params=FAST)
    assert set(out) == {"auc", "f_score"}
    assert out["auc"].scores.shape == (2, 2)
    assert np.all((0 <= out["auc"].p_values) & (out["auc"].p_values <= 1))
    with pytest.raises(ValueError):
        resampled_comparison(prepared, "health", ["lr"], 2, params=FAST)
    with pytest.raises(ValueError):
        resampled_comparison(prepared, "health", ["lr", "rf"], 1, params=FAST)


# --- reports ---------------------------------------------------------------


def test_metric_block_layout_and_bolding():
    values = {("lr", "financial"): 0.9, ("rf", "financial"): 0.8, ("lr", "health"): 0.7, ("rf", "health"): 0.85}
    lines = metric_block("auc", ["lr", "rf"], ["health", "financial"], values).splitlines()
    assert lines[0] == "**AUC**"
    assert lines[2] == "| Algorithm | Financial | Health | Mean |"
    assert lines[4] == "| LR | **0.900** | 0.700 | 0.800 |"
    assert lines[5] == "| RF | 0.800 | **0.850** | **0.825** |"


def test_explicit_flags_override_the_maximum():
    values = {("lr", "health"): 0.9, ("rf", "health"): 0.89}
    text = metric_block("auc", ["lr", "rf"], ["health"], values, {"health": [True, True]})
    assert "| RF | **0.890** |" in text


def test_markdown_has_both_blocks_and_csv_is_ordered():
    results = {("lr", "health"): {"auc": 0.9, "f_score": 0.5}}
    md = metrics_markdown("Full", ["lr"], ["health"], results, note="note")
    assert md.index("**AUC**") < md.index("**F score**") and md.rstrip().endswith("note")
    row = {"auc": 0.5, "f_score": 0.5, "false_negatives": 1, "false_positives": 2, "grey_zone": 0}
    csv_text = metrics_csv({("health", "lr", "full"): row, ("financial", "rf", "full"): row})
    assert [r.split(",")[0] for r in csv_text.splitlines()[1:]] == ["financial", "health"]


def test_timing_table_reduction():
    md = timing_markdown([{"sector": "energy", "algorithm": "gbm", "full": 10.0, "selected": 4.0, "selection": 3.0}])
    assert "| Energy | GBM | 10.00 | 4.00 | 60.0% | 3.00 |" in md
