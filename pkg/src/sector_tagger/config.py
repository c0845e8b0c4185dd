"""Run configuration: YAML file, environment overrides, validation.

Any key can be overridden with ``SECTOR_TAGGER_<KEY>__<SUBKEY>=value``;
the value is parsed as YAML, so ``SECTOR_TAGGER_CV__FOLDS=5`` sets an int.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .corpus import SECTORS
from .evaluation.cv import FEATURE_MODES, CvParams, FeatureParams
from .features import WEIGHTINGS
from .learners import ALGORITHMS, PARAM_TYPES
from .selection import DEFAULT_QUANTILES, RANKERS, SelectionParams
from .synthetic import SynthSpec

ENV_PREFIX = "SECTOR_TAGGER_"


class ConfigError(ValueError):
    """All problems found in one configuration, each as (field path, message)."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in errors))


@dataclass(frozen=True)
class CorpusConfig:
    path: str | None = None
    taxonomy: str | None = None
    merge_map: str | None = None
    stopwords: str | None = None
    synthetic: dict | None = None


@dataclass(frozen=True)
class CvConfig:
    folds: int = 10
    threshold: float = 0.5
    grey: tuple[float, float] = (0.4, 0.6)
    f_beta: float = 1.0
    resamples: int = 0


@dataclass(frozen=True)
class SelectionConfig:
    rankers: tuple[str, ...] = RANKERS
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES
    inner_folds: int = 3
    learners: dict = field(default_factory=lambda: {"lr": {}, "rf": {"n_trees": 25}, "gbm": {"n_stages": 50}})


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output_dir: str
    corpus: CorpusConfig
    sectors: tuple[str, ...] = SECTORS
    algorithms: dict = field(default_factory=lambda: {a: {} for a in ALGORITHMS})
    feature_modes: tuple[str, ...] = ("full", "selected")
    features: dict = field(default_factory=lambda: asdict(FeatureParams()))
    cv: CvConfig = field(default_factory=CvConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    save_models: bool = True
    workers: int = 1

    def cv_params(self) -> CvParams:
        return CvParams(
            folds=self.cv.folds,
            threshold=self.cv.threshold,
            grey=tuple(self.cv.grey),
            f_beta=self.cv.f_beta,
            features=FeatureParams(**self.features),
            learners={a: PARAM_TYPES[a](**p) for a, p in self.algorithms.items()},
            selection=self.selection_params(),
        )

    def selection_params(self) -> SelectionParams:
        return SelectionParams(
            rankers=tuple(self.selection.rankers),
            quantiles=tuple(self.selection.quantiles),
            inner_folds=self.selection.inner_folds,
            learner_params={a: PARAM_TYPES[a](**p) for a, p in self.selection.learners.items()},
        )

    def to_dict(self) -> dict:
        """Plain JSON-compatible form (tuples become lists)."""
        return json.loads(json.dumps(asdict(self)))


# (check, message) per learner hyperparameter
_PARAM_RULES = {
    "l2_lambda": (lambda v: _is_num(v) and v >= 0, "must be a number >= 0"),
    "max_iter": (lambda v: _is_int(v) and v >= 1, "must be an integer >= 1"),
    "tol": (lambda v: _is_num(v) and v > 0, "must be a number > 0"),
    "n_trees": (lambda v: _is_int(v) and v >= 1, "must be an integer >= 1"),
    "n_stages": (lambda v: _is_int(v) and v >= 0, "must be an integer >= 0"),
    "learning_rate": (lambda v: _is_num(v) and 0 < v <= 1, "must lie in (0, 1]"),
    "max_depth": (lambda v: v is None or (_is_int(v) and v >= 1), "must be null or an integer >= 1"),
    "min_samples_leaf": (lambda v: _is_int(v) and v >= 1, "must be an integer >= 1"),
    "max_features": (
        lambda v: v in (None, "sqrt", "all") or (_is_int(v) and v >= 1),
        "must be 'sqrt', 'all', null or an integer >= 1",
    ),
}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def load_yaml(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([("config", f"file not found: {path}")])
    try:
        data = yaml.safe_load(path.read_text("utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError([("config", f"invalid YAML in {path}: {exc}")]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([("config", "top level must be a mapping")])
    return data


def apply_env_overrides(raw: dict, environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    out = copy.deepcopy(raw)
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        keys = [k.lower() for k in name[len(ENV_PREFIX):].split("__")]
        if not all(keys):
            continue
        node = out
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                node[k] = {}
            node = node[k]
        node[keys[-1]] = yaml.safe_load(environ[name])
    return out


def _resolve(base: Path | None, p: str | None) -> str | None:
    if p is None:
        return None
    path = Path(p)
    if base is not None and not path.is_absolute():
        path = base / path
    return str(path)


def _count_lines(path: str) -> int:
    with open(path, encoding="utf-8") as fh:
        return sum(1 for line in fh if line.strip())


class _Collector:
    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def add(self, path: str, msg: str) -> None:
        self.errors.append((path, msg))

    def unknown_keys(self, section: Mapping, allowed, prefix: str) -> None:
        for key in section:
            if key not in allowed:
                self.add(f"{prefix}{key}", f"unknown key; expected one of {sorted(allowed)}")


def _section(raw: Mapping, key: str, errs: _Collector) -> dict:
    value = raw.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        errs.add(key, "must be a mapping")
        return {}
    return value


def _learner_block(value, prefix: str, errs: _Collector, allow_list: bool) -> dict:
    if allow_list and isinstance(value, list):
        value = {name: {} for name in value}
    if not isinstance(value, dict) or not value:
        errs.add(prefix, "must be a non-empty mapping of algorithm name to hyperparameters")
        return {}
    out = {}
    for name, params in value.items():
        path = f"{prefix}.{name}"
        if name not in ALGORITHMS:
            errs.add(path, f"unknown algorithm; valid algorithms are {list(ALGORITHMS)}")
            continue
        params = {} if params is None else params
        if not isinstance(params, dict):
            errs.add(path, "hyperparameters must be a mapping")
            continue
        allowed = {f.name for f in fields(PARAM_TYPES[name])}
        ok = True
        for key, v in params.items():
            if key not in allowed:
                errs.add(f"{path}.{key}", f"unknown hyperparameter; expected one of {sorted(allowed)}")
                ok = False
            elif not _PARAM_RULES[key][0](v):
                errs.add(f"{path}.{key}", _PARAM_RULES[key][1])
                ok = False
        if ok:
            out[name] = asdict(PARAM_TYPES[name](**params))
    return out


def validate_config(raw: Mapping[str, Any], base_dir: str | Path | None = None) -> RunConfig:
    """Check every field, fill defaults, and resolve paths against ``base_dir``.

    Raises :class:`ConfigError` carrying every violation found.
    """
    errs = _Collector()
    base = Path(base_dir) if base_dir is not None else None
    top = {f.name for f in fields(RunConfig)}
    errs.unknown_keys(raw, top, "")

    seed = raw.get("seed")
    if not _is_int(seed) or seed < 0:
        errs.add("seed", "an explicit non-negative integer seed is required")
    output_dir = raw.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        errs.add("output_dir", "required output directory path")
        output_dir = ""

    c = _section(raw, "corpus", errs)
    errs.unknown_keys(c, {f.name for f in fields(CorpusConfig)}, "corpus.")
    corpus_size = None
    synth = c.get("synthetic")
    if (c.get("path") is None) == (synth is None):
        errs.add("corpus", "give exactly one of corpus.path or corpus.synthetic")
    paths = {k: _resolve(base, c.get(k)) for k in ("path", "taxonomy", "merge_map", "stopwords")}
    for key, p in paths.items():
        if c.get(key) is not None and not isinstance(c.get(key), str):
            errs.add(f"corpus.{key}", "must be a file path")
        elif p is not None and not Path(p).is_file():
            errs.add(f"corpus.{key}", f"file not found: {p}")
    if paths["path"] is not None:
        if paths["taxonomy"] is None:
            errs.add("corpus.taxonomy", "required when corpus.path is given")
        if Path(paths["path"]).is_file():
            corpus_size = _count_lines(paths["path"])
    if synth is not None:
        if not isinstance(synth, dict):
            errs.add("corpus.synthetic", "must be a mapping of generator settings")
            synth = None
        else:
            try:
                spec = SynthSpec.from_dict(synth)
                spec.validate()
                synth = spec.to_dict()
                corpus_size = spec.docs
            except (TypeError, ValueError) as exc:
                errs.add("corpus.synthetic", str(exc))
    corpus = CorpusConfig(synthetic=synth, **paths)

    sectors = raw.get("sectors", list(SECTORS))
    if not isinstance(sectors, list) or not sectors:
        errs.add("sectors", f"must be a non-empty list drawn from {list(SECTORS)}")
        sectors = []
    for i, s in enumerate(sectors):
        if s not in SECTORS:
            errs.add(f"sectors[{i}]", f"unknown sector {s!r}; valid sectors are {list(SECTORS)}")
    if len(set(sectors)) != len(sectors):
        errs.add("sectors", "duplicate sector")
    sectors = tuple(s for s in SECTORS if s in sectors)

    algorithms = _learner_block(raw.get("algorithms", {a: {} for a in ALGORITHMS}), "algorithms", errs, True)

    modes = raw.get("feature_modes", ["full", "selected"])
    if not isinstance(modes, list) or not modes or any(m not in FEATURE_MODES for m in modes):
        errs.add("feature_modes", f"must be a non-empty list drawn from {list(FEATURE_MODES)}")
        modes = []
    modes = tuple(m for m in FEATURE_MODES if m in modes)

    f = _section(raw, "features", errs)
    errs.unknown_keys(f, {x.name for x in fields(FeatureParams)}, "features.")
    features = asdict(FeatureParams())
    features.update({k: v for k, v in f.items() if k in features})
    if features["weighting"] not in WEIGHTINGS:
        errs.add("features.weighting", f"must be one of {list(WEIGHTINGS)}")
    if not _is_int(features["min_df"]) or features["min_df"] < 1:
        errs.add("features.min_df", "must be an integer >= 1")
    if not isinstance(features["propagate_topics"], bool):
        errs.add("features.propagate_topics", "must be true or false")

    cvr = _section(raw, "cv", errs)
    errs.unknown_keys(cvr, {x.name for x in fields(CvConfig)}, "cv.")
    cv = {**asdict(CvConfig()), **{k: v for k, v in cvr.items() if k in asdict(CvConfig())}}
    if not _is_int(cv["folds"]) or cv["folds"] < 2:
        errs.add("cv.folds", "must be an integer >= 2")
    elif corpus_size is not None and cv["folds"] > corpus_size:
        errs.add("cv.folds", f"exceeds the corpus size ({corpus_size})")
    if not _is_num(cv["threshold"]) or not 0 < cv["threshold"] < 1:
        errs.add("cv.threshold", "must lie strictly between 0 and 1")
    grey = cv["grey"]
    if not (isinstance(grey, (list, tuple)) and len(grey) == 2 and all(map(_is_num, grey)) and 0 <= grey[0] <= grey[1] <= 1):
        errs.add("cv.grey", "must be [low, high] with 0 <= low <= high <= 1")
        grey = (0.4, 0.6)
    if not _is_num(cv["f_beta"]) or cv["f_beta"] <= 0:
        errs.add("cv.f_beta", "must be a number > 0")
    if not _is_int(cv["resamples"]) or cv["resamples"] < 0 or cv["resamples"] == 1:
        errs.add("cv.resamples", "must be 0 (no comparison) or an integer >= 2")
    cv_cfg = CvConfig(cv["folds"], cv["threshold"], tuple(grey), cv["f_beta"], cv["resamples"])

    sr = _section(raw, "selection", errs)
    errs.unknown_keys(sr, {x.name for x in fields(SelectionConfig)}, "selection.")
    rankers = sr.get("rankers", list(RANKERS))
    if not isinstance(rankers, list) or not rankers or any(r not in RANKERS for r in rankers):
        errs.add("selection.rankers", f"must be a non-empty list drawn from {list(RANKERS)}")
        rankers = list(RANKERS)
    quantiles = sr.get("quantiles", list(DEFAULT_QUANTILES))
    if not isinstance(quantiles, list) or not quantiles or not all(_is_num(q) and 0 <= q <= 1 for q in quantiles):
        errs.add("selection.quantiles", "must be a non-empty list of numbers in [0, 1]")
        quantiles = list(DEFAULT_QUANTILES)
    inner = sr.get("inner_folds", 3)
    if not _is_int(inner) or inner < 2:
        errs.add("selection.inner_folds", "must be an integer >= 2")
    sel_learners = _learner_block(sr.get("learners", SelectionConfig().learners), "selection.learners", errs, False)
    for a in ALGORITHMS:
        sel_learners.setdefault(a, asdict(PARAM_TYPES[a]()))
    selection = SelectionConfig(tuple(rankers), tuple(quantiles), inner, sel_learners)

    save_models = raw.get("save_models", True)
    if not isinstance(save_models, bool):
        errs.add("save_models", "must be true or false")
    workers = raw.get("workers", 1)
    if not _is_int(workers) or workers < 1:
        errs.add("workers", "must be an integer >= 1")

    if errs.errors:
        raise ConfigError(errs.errors)
    return RunConfig(
        seed=seed,
        output_dir=str(_resolve(base, output_dir)),
        corpus=corpus,
        sectors=sectors,
        algorithms=algorithms,
        feature_modes=modes,
        features=features,
        cv=cv_cfg,
        selection=selection,
        save_models=save_models,
        workers=workers,
    )


def load_config(path: str | Path, environ: Mapping[str, str] | None = None, base_dir=None) -> RunConfig:
    """Read, override from the environment, and validate.

    Relative paths resolve against ``base_dir`` (default: the working directory).
    """
    raw = apply_env_overrides(load_yaml(path), environ)
    return validate_config(raw, base_dir)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
