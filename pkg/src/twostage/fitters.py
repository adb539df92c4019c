"""Picklable dataset -> predictor factories for benchmarking and worker pools."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import Tallying, default_directions, fit_symmetric_logistic
from .fit import FitConfig, fit_tables, select_context
from .schema import ComparisonDataset


@dataclass(frozen=True)
class TwoStageFitter:
    """``context`` is ``"auto"`` (cross-validated), ``None`` or a feature name."""

    config: FitConfig
    context: str | None = None

    def __call__(self, train: ComparisonDataset):
        if self.context == "auto":
            return select_context(train, self.config)[1]
        ctx = None if self.context is None else train.schema.index(self.context)
        return fit_tables(train, self.config, ctx)


@dataclass(frozen=True)
class LogisticFitter:
    l2: float = 1e-6
    ftol: float = 1e-7
    max_iter: int = 300

    def __call__(self, train: ComparisonDataset):
        return fit_symmetric_logistic(train, self.l2, self.ftol, self.max_iter)


@dataclass(frozen=True)
class TallyingFitter:
    directions: tuple[int, ...] | None = None

    def __call__(self, train: ComparisonDataset):
        dirs = default_directions(train.schema) if self.directions is None else np.asarray(self.directions)
        return Tallying(dirs)
