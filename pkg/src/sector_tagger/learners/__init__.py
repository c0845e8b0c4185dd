"""Binary classifiers with probability outputs and feature importances."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .forest import GRADIENT_BOOSTING, RANDOM_FOREST, ForestModel, fit_gbm, fit_random_forest
from .importance import (
    ImportanceVector,
    importance_abs_coefficient,
    importance_mdi,
    importance_prediction_change,
)
from .io import ModelFormatError, load_model, load_model_meta, model_from_dict, model_to_dict, save_model
from .logistic import LogisticModel, fit_logistic
from .tree import DecisionTree, fit_tree, gini

ALGORITHMS = ("lr", "rf", "gbm")


@dataclass(frozen=True)
class LogisticParams:
    l2_lambda: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-6


@dataclass(frozen=True)
class RandomForestParams:
    n_trees: int = 50
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: int | str | None = "sqrt"


@dataclass(frozen=True)
class GbmParams:
    n_stages: int = 100
    learning_rate: float = 0.3
    max_depth: int | None = 3
    min_samples_leaf: int = 5


PARAM_TYPES = {"lr": LogisticParams, "rf": RandomForestParams, "gbm": GbmParams}


def make_params(algorithm: str, values: dict | None = None):
    if algorithm not in PARAM_TYPES:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {list(ALGORITHMS)}")
    return PARAM_TYPES[algorithm](**(values or {}))


def fit_model(algorithm: str, X, y, params=None, seed=0):
    """Fit the named learner; ``seed`` only matters for the random forest."""
    params = make_params(algorithm) if params is None else params
    if algorithm == "lr":
        return fit_logistic(X, y, **asdict(params))
    if algorithm == "rf":
        return fit_random_forest(X, y, seed=seed, **asdict(params))
    if algorithm == "gbm":
        return fit_gbm(X, y, **asdict(params))
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {list(ALGORITHMS)}")


def predict_proba(model, X) -> np.ndarray:
    """Positive-class probability for each row of ``X``."""
    if isinstance(model, (ForestModel, LogisticModel)):
        return model.predict_proba(X)
    raise TypeError(f"not a fitted model: {type(model).__name__}")


__all__ = [
    "ALGORITHMS",
    "DecisionTree",
    "ForestModel",
    "GRADIENT_BOOSTING",
    "GbmParams",
    "ImportanceVector",
    "LogisticModel",
    "LogisticParams",
    "ModelFormatError",
    "RANDOM_FOREST",
    "RandomForestParams",
    "fit_gbm",
    "fit_logistic",
    "fit_model",
    "fit_random_forest",
    "fit_tree",
    "gini",
    "importance_abs_coefficient",
    "importance_mdi",
    "importance_prediction_change",
    "load_model",
    "load_model_meta",
    "make_params",
    "model_from_dict",
    "model_to_dict",
    "predict_proba",
    "save_model",
]
