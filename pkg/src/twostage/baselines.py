"""Reference predictors: symmetric logistic regression and sign-vote tallying."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DatasetError, FitError, ModelFormatError
from .optim import minimize_projected
from .schema import ComparisonDataset, FeatureSchema


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``P(first) = logistic(w . (x1 - x2))`` over raw feature values."""

    schema: FeatureSchema
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape != (self.schema.d,):
            raise ModelFormatError(f"expected {self.schema.d} weights, got {w.size}")
        if not np.all(np.isfinite(w)):
            raise ModelFormatError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def differences(self, first, second) -> np.ndarray:
        diff = np.atleast_2d(np.asarray(first, dtype=float)) - np.atleast_2d(np.asarray(second, dtype=float))
        return diff @ self.weights

    def prob(self, first, second) -> np.ndarray:
        return special.expit(self.differences(first, second))

    def choices(self, first, second) -> np.ndarray:
        return np.sign(self.differences(first, second)).astype(np.int8)

    __call__ = choices


def predict_linear(model: LinearModel, x1, x2) -> float:
    return float(model.prob(np.reshape(x1, (1, -1)), np.reshape(x2, (1, -1)))[0])


def fit_symmetric_logistic(
    dataset: ComparisonDataset, l2: float = 1e-6, ftol: float = 1e-7, max_iter: int = 300, seed: int = 0
) -> LinearModel:
    """Penalized logistic regression on feature differences, no intercept.

    Uses the same BB/Armijo descent as the editing-table fit, unconstrained
    and started from zero; ``seed`` is accepted for interface symmetry (the
    procedure is deterministic).
    """
    if len(dataset) == 0:
        raise DatasetError("cannot fit on an empty dataset")
    X = dataset.first - dataset.second
    y = 2.0 * dataset.choice - 1.0

    def fun(w):
        m = y * (X @ w)
        value = float(np.sum(np.logaddexp(0.0, -m)) + l2 * w @ w)
        grad = -(X.T @ (y * special.expit(-m))) + 2.0 * l2 * w
        return value, grad

    res = minimize_projected(fun, np.zeros(dataset.schema.d), ftol=ftol, max_iter=max_iter)
    if not np.isfinite(res.fun):
        raise FitError("logistic fit diverged")
    return LinearModel(dataset.schema, res.x)


def export_linear(model: LinearModel) -> str:
    return json.dumps({
        "features": model.schema.to_dict()["features"],
        "weights": {n: float(w) for n, w in zip(model.schema.names, model.weights)},
    }, indent=2) + "\n"


def import_linear(text: str) -> LinearModel:
    try:
        obj = json.loads(text)
        schema = FeatureSchema.from_dict({"features": obj["features"]})
        weights = [float(obj["weights"][n]) for n in schema.names]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed linear model file: {exc}") from None
    return LinearModel(schema, weights)


def default_directions(schema: FeatureSchema) -> np.ndarray:
    return np.array([f.hint_sign or 1 for f in schema.features])


@dataclass(frozen=True, eq=False)
class Tallying:
    """Choose the alternative favored on more features."""

    directions: np.ndarray

    def choices(self, first, second) -> np.ndarray:
        diff = np.atleast_2d(np.asarray(first, dtype=float)) - np.atleast_2d(np.asarray(second, dtype=float))
        t = np.sign(diff) @ np.asarray(self.directions, dtype=float)
        return np.sign(t).astype(np.int8)

    __call__ = choices


def tallying_predict(directions, x1, x2) -> int:
    """+1 (first), -1 (second) or 0 (tie) by signed feature votes."""
    return int(Tallying(np.asarray(directions)).choices(np.reshape(x1, (1, -1)), np.reshape(x2, (1, -1)))[0])
