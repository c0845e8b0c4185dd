"""Versioned JSON persistence for fitted models.

Floats are written with ``repr`` precision, so a loaded model predicts
bit-identically to the one saved.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forest import ForestModel
from .logistic import LogisticModel
from .tree import DecisionTree

MODEL_FORMAT = "sector-tagger/model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    pass


def model_to_dict(model) -> dict:
    if isinstance(model, ForestModel):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": model.mode,
            "feature_dimension": model.feature_dimension,
            "learning_rate": model.learning_rate,
            "base_score": model.base_score,
            "params": model.params,
            "trees": [t.to_dict() for t in model.trees],
        }
    if isinstance(model, LogisticModel):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": "logistic",
            "feature_dimension": model.feature_dimension,
            "beta": model.beta.tolist(),
            "intercept": model.intercept,
            "converged": model.converged,
            "n_iter": model.n_iter,
            "params": model.params,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(data: dict):
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a sector-tagger model file")
    if data.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version')!r} (expected {MODEL_VERSION})")
    try:
        kind = data["kind"]
        if kind == "logistic":
            model = LogisticModel(
                np.array(data["beta"], dtype=np.float64),
                float(data["intercept"]),
                bool(data["converged"]),
                int(data["n_iter"]),
                dict(data["params"]),
            )
        else:
            model = ForestModel(
                tuple(DecisionTree.from_dict(t) for t in data["trees"]),
                kind,
                int(data["feature_dimension"]),
                float(data["learning_rate"]),
                float(data["base_score"]),
                dict(data["params"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    if model.feature_dimension != data["feature_dimension"]:
        raise ModelFormatError("coefficient count disagrees with the declared feature dimension")
    return model


def save_model(model, path: str | Path, meta: dict | None = None) -> None:
    """Write ``model``; ``meta`` is stored alongside and ignored when loading the model."""
    data = model_to_dict(model)
    if meta is not None:
        data["meta"] = meta
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data) + "\n", "utf-8")


def read_model_file(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc.msg})") from exc


def load_model(path: str | Path):
    return model_from_dict(read_model_file(path))


def load_model_meta(path: str | Path) -> dict:
    return dict(read_model_file(path).get("meta", {}))
