"""Accuracy scoring and the repeated train/test benchmarking harness.

A *predictor* is any callable ``predictor(first, second)`` taking two
``(N, d)`` value arrays and returning an array of choice codes: +1 (first),
-1 (second) or 0 (tie).  Fitted models, baselines and DM oracles all expose
this form.  A *fitter* maps a training ``ComparisonDataset`` to a predictor.
"""

from __future__ import annotations

import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DatasetError
from .schema import ComparisonDataset, split_dataset
from .seeding import derive_seed

log = logging.getLogger(__name__)

Predictor = Callable[[np.ndarray, np.ndarray], np.ndarray]
Fitter = Callable[[ComparisonDataset], Predictor]


def credit_halves(predicted: np.ndarray, choice: np.ndarray) -> int:
    """Twice the total accuracy credit: 2 per correct side, 1 per tie.

    Integer-valued, so candidate comparisons are exact.
    """
    predicted = np.asarray(predicted)
    target = np.where(np.asarray(choice) == 1, 1, -1)
    return int(2 * np.sum(predicted == target) + np.sum(predicted == 0))


def accuracy(predictor: Predictor, dataset: ComparisonDataset) -> float:
    """Mean credit: 1 for the chosen side, 0.5 for a tie, 0 otherwise."""
    if len(dataset) == 0:
        raise DatasetError("accuracy of an empty dataset is undefined")
    predicted = np.asarray(predictor(dataset.first, dataset.second))
    return credit_halves(predicted, dataset.choice) / (2 * len(dataset))


@dataclass
class BenchmarkResult:
    mean: float
    std: float
    per_rep: list[float | None]
    seed: int
    failures: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "per_rep": self.per_rep,
            "seed": self.seed,
            "failures": [{"rep": r, "error": e} for r, e in self.failures],
        }


def _run_rep(args):
    fitter, dataset, train_fraction, rep_seed = args
    train, test = split_dataset(dataset, train_fraction, rep_seed)
    try:
        predictor = fitter(train)
        return accuracy(predictor, test), None
    except Exception as exc:  # a failed repetition is reported, not fatal
        return None, f"{type(exc).__name__}: {exc}"


def benchmark(
    fitter: Fitter,
    dataset: ComparisonDataset,
    reps: int = 20,
    train_fraction: float = 0.7,
    seed: int = 0,
    jobs: int = 1,
) -> BenchmarkResult:
    """Repeat split / fit / score ``reps`` times.

    Rows are first put in canonical (sorted) order, so results do not depend
    on the input row order.  Repetition ``r`` splits with
    ``derive_seed(seed, "bench-split", r)``.  ``std`` is the sample standard
    deviation over successful repetitions (0 when there is only one).
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if len(dataset) == 0:
        raise DatasetError("cannot benchmark on an empty dataset")
    canon = dataset.subset(dataset.canonical_order())
    tasks = [(fitter, canon, train_fraction, derive_seed(seed, "bench-split", r)) for r in range(reps)]
    if jobs > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_rep, tasks))
    else:
        results = [_run_rep(t) for t in tasks]
    per_rep = [acc for acc, _ in results]
    failures = [(r, err) for r, (_, err) in enumerate(results) if err is not None]
    for r, err in failures:
        log.warning("repetition %d failed: %s", r, err)
    ok = [a for a in per_rep if a is not None]
    if not ok:
        return BenchmarkResult(float("nan"), float("nan"), per_rep, seed, failures)
    std = statistics.stdev(ok) if len(ok) > 1 else 0.0
    return BenchmarkResult(statistics.fmean(ok), std, per_rep, seed, failures)


def log_loss(probs: np.ndarray, choice: np.ndarray, eps: float = 1e-12) -> float:
    p = np.clip(np.asarray(probs, dtype=float), eps, 1.0 - eps)
    r = np.asarray(choice)
    return float(-np.mean(r * np.log(p) + (1 - r) * np.log1p(-p)))
