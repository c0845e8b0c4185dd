from __future__ import annotations

import pytest
import yaml

from sector_tagger.config import (
    ConfigError,
    apply_env_overrides,
    dump_config,
    load_config,
    validate_config,
)
from sector_tagger.corpus import SECTORS
from sector_tagger.learners import ALGORITHMS

MINIMAL = {"seed": 1, "output_dir": "out", "corpus": {"synthetic": {"docs": 50}}}


def errors_of(raw, **kw) -> dict:
    with pytest.raises(ConfigError) as info:
        validate_config(raw, **kw)
    return dict(info.value.errors)


def test_zero_folds_names_the_field():
    errs = errors_of({**MINIMAL, "cv": {"folds": 0}})
    assert "cv.folds" in errs


def test_minimal_config_is_filled_with_defaults():
    cfg = validate_config(MINIMAL)
    assert cfg.sectors == SECTORS
    assert tuple(cfg.algorithms) == ALGORITHMS
    assert cfg.feature_modes == ("full", "selected")
    assert cfg.cv.folds == 10 and cfg.cv.threshold == 0.5
    assert cfg.algorithms["gbm"]["n_stages"] == 100
    echoed = yaml.safe_load(dump_config(cfg))
    assert echoed["cv"]["folds"] == 10 and echoed["features"]["weighting"] == "tf_idf"


def test_unknown_algorithm_lists_the_valid_set():
    errs = errors_of({**MINIMAL, "algorithms": {"svm": {}}})
    assert "'lr', 'rf', 'gbm'" in errs["algorithms.svm"]


def test_all_violations_are_collected():
    errs = errors_of(
        {
            "output_dir": "out",
            "corpus": {"synthetic": {"docs": 50}},
            "sectors": ["financial", "mining"],
            "algorithms": {"rf": {"n_trees": 0}},
            "cv": {"threshold": 1.5},
            "bogus": 1,
        }
    )
    assert {"seed", "sectors[1]", "algorithms.rf.n_trees", "cv.threshold", "bogus"} <= set(errs)


def test_folds_cannot_exceed_the_corpus():
    errs = errors_of({**MINIMAL, "corpus": {"synthetic": {"docs": 5}}, "cv": {"folds": 10}})
    assert "corpus size" in errs["cv.folds"]


def test_missing_files_are_reported(tmp_path):
    raw = {"seed": 1, "output_dir": "o", "corpus": {"path": "nope.jsonl", "taxonomy": "tax.json"}}
    errs = errors_of(raw, base_dir=tmp_path)
    assert "nope.jsonl" in errs["corpus.path"] and "tax.json" in errs["corpus.taxonomy"]


def test_exactly_one_corpus_source():
    assert "corpus" in errors_of({"seed": 1, "output_dir": "o", "corpus": {}})


def test_relative_paths_resolve_against_the_base(tmp_path):
    (tmp_path / "c.jsonl").write_text("{}\n" * 20)
    (tmp_path / "t.json").write_text("{}")
    raw = {"seed": 1, "output_dir": "runs/x", "corpus": {"path": "c.jsonl", "taxonomy": "t.json"}}
    cfg = validate_config(raw, base_dir=tmp_path)
    assert cfg.corpus.path == str(tmp_path / "c.jsonl")
    assert cfg.output_dir == str(tmp_path / "runs" / "x")


def test_algorithm_list_shorthand_and_params():
    cfg = validate_config({**MINIMAL, "algorithms": ["rf"]})
    assert cfg.algorithms == {"rf": {"n_trees": 50, "max_depth": None, "min_samples_leaf": 1, "max_features": "sqrt"}}
    params = cfg.cv_params()
    assert params.learners["rf"].n_trees == 50
    assert params.selection.learner_params["gbm"].n_stages == 50


def test_env_overrides_parse_values_and_nest():
    raw = apply_env_overrides(MINIMAL, {"SECTOR_TAGGER_CV__FOLDS": "4", "SECTOR_TAGGER_SEED": "9", "OTHER": "x"})
    cfg = validate_config(raw)
    assert cfg.cv.folds == 4 and cfg.seed == 9
    assert MINIMAL.get("cv") is None


def test_load_config_applies_env(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(MINIMAL))
    cfg = load_config(path, {"SECTOR_TAGGER_SECTORS": "[health]"}, base_dir=tmp_path)
    assert cfg.sectors == ("health",)


def test_unreadable_config_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml", {})
    (tmp_path / "bad.yaml").write_text("a: [1, 2\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(tmp_path / "bad.yaml", {})
    (tmp_path / "list.yaml").write_text("- 1\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(tmp_path / "list.yaml", {})


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"cv": {"resamples": 1}}, "cv.resamples"),
        ({"cv": {"grey": [0.7, 0.3]}}, "cv.grey"),
        ({"features": {"weighting": "bm25"}}, "features.weighting"),
        ({"selection": {"rankers": ["x"]}}, "selection.rankers"),
        ({"selection": {"inner_folds": 1}}, "selection.inner_folds"),
        ({"feature_modes": ["both"]}, "feature_modes"),
        ({"workers": 0}, "workers"),
        ({"algorithms": {"gbm": {"learning_rate": 2}}}, "algorithms.gbm.learning_rate"),
        ({"algorithms": {"lr": {"C": 1}}}, "algorithms.lr.C"),
    ],
)
def test_field_checks(patch, field):
    assert field in errors_of({**MINIMAL, **patch})


def test_shipped_configs_validate():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1]
    for name in ("smoke.yaml", "benchmark.yaml"):
        cfg = load_config(root / "configs" / name, {}, base_dir=root)
        assert cfg.seed >= 0
