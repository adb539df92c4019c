"""Simulated kidney-allocation decision makers.

DM1-DM5 follow the heuristic choice processes used for the synthetic
benchmark; CF1 is a conditional two-stage logistic model in which life years
gained only matters for patients without dependents.  All laws are exact
functions of the two alternatives; randomness enters only when sampling a
dataset.

Feature order of the synthetic schema: deps, lyg, wait, crimes.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .model import TwoStageModel
from .links import Link
from .schema import ComparisonDataset, FeatureSchema, FeatureSpec
from .seeding import make_rng

DEPS, LYG, WAIT, CRIMES = range(4)
DM_IDS = ("dm1", "dm2", "dm3", "dm4", "dm5", "cf1")


def synthetic_schema() -> FeatureSchema:
    return FeatureSchema((
        FeatureSpec("deps", tuple(range(0, 4))),
        FeatureSpec("lyg", tuple(range(1, 11))),
        FeatureSpec("wait", tuple(range(0, 11))),
        FeatureSpec("crimes", tuple(range(0, 4))),
    ))


def _log_bucket(lyg: np.ndarray) -> np.ndarray:
    return np.floor(np.log(lyg))


def _lexicographic(keys1: list[np.ndarray], keys2: list[np.ndarray]) -> np.ndarray:
    """1 / 0 / 0.5 for the first nonzero key comparison, coin flip if all equal."""
    out = np.full(np.broadcast(keys1[0], keys2[0]).shape, 0.5)
    undecided = np.ones(out.shape, dtype=bool)
    for k1, k2 in zip(keys1, keys2):
        s = np.sign(np.asarray(k1, dtype=float) - np.asarray(k2, dtype=float))
        hit = undecided & (s != 0)
        out[hit] = (s[hit] > 0).astype(float)
        undecided &= s == 0
    return out


def _sign_prob(t: np.ndarray) -> np.ndarray:
    return np.where(t > 0, 1.0, np.where(t < 0, 0.0, 0.5))


def _dm1(a, b):
    k = (
        np.sign(a[:, LYG] - b[:, LYG])
        + (a[:, DEPS] >= 1).astype(float) - (b[:, DEPS] >= 1)
        + (a[:, WAIT] > 6).astype(float) - (b[:, WAIT] > 6)
    )
    return special.ndtr(k)


def _dm2(a, b):
    return _lexicographic(
        [a[:, DEPS] >= 1, a[:, LYG], a[:, WAIT]],
        [b[:, DEPS] >= 1, b[:, LYG], b[:, WAIT]],
    )


def _dm3_points(x):
    return _log_bucket(x[:, LYG]) + x[:, DEPS] + (x[:, WAIT] >= 5)


def _dm3(a, b):
    return _sign_prob(_dm3_points(a) - _dm3_points(b))


def _dm4(a, b):
    return _lexicographic(
        [_log_bucket(a[:, LYG]), a[:, DEPS], a[:, WAIT]],
        [_log_bucket(b[:, LYG]), b[:, DEPS], b[:, WAIT]],
    )


DM5_DIRECTIONS = (1, 1, 1, -1)


def _dm5(a, b):
    t = sum(s * np.sign(a[:, i] - b[:, i]) for i, s in enumerate(DM5_DIRECTIONS))
    return _sign_prob(t)


@lru_cache(maxsize=None)
def cf1_model() -> TwoStageModel:
    """Conditional fixture: context deps; lyg counts (unit slope) only at deps == 0."""
    schema = synthetic_schema()
    lyg = np.zeros((4, 10))
    lyg[0] = np.arange(10.0)
    wait = 0.25 * np.arange(11.0)[None, :] + 2.0 * np.arange(4.0)[:, None]
    crimes = np.tile(-0.5 * np.arange(4.0), (4, 1))
    return TwoStageModel(schema, DEPS, {LYG: lyg, WAIT: wait, CRIMES: crimes}, Link.LOGISTIC, {CRIMES: -1})


def _cf1(a, b):
    return cf1_model().prob(a, b)


_LAWS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "dm1": _dm1, "dm2": _dm2, "dm3": _dm3, "dm4": _dm4, "dm5": _dm5, "cf1": _cf1,
}


@dataclass(frozen=True)
class SimulatedDM:
    id: str

    def __post_init__(self):
        object.__setattr__(self, "id", self.id.lower())
        if self.id not in _LAWS:
            raise ValueError(f"unknown decision maker {self.id!r}; expected one of {', '.join(DM_IDS)}")

    @property
    def schema(self) -> FeatureSchema:
        return synthetic_schema()

    def prob(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        first = np.atleast_2d(np.asarray(first, dtype=float))
        second = np.atleast_2d(np.asarray(second, dtype=float))
        return _LAWS[self.id](first, second)

    def choices(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        """Bayes-optimal prediction: the side with probability above one half."""
        p = self.prob(first, second)
        return np.sign(p - 0.5).astype(np.int8)

    __call__ = choices


def dm_prob(dm: SimulatedDM | str, x1, x2) -> float:
    dm = SimulatedDM(dm) if isinstance(dm, str) else dm
    return float(dm.prob(np.asarray(x1, dtype=float).reshape(1, -1), np.asarray(x2, dtype=float).reshape(1, -1))[0])


def simulate_dataset(dm: SimulatedDM | str, n: int, seed: int) -> ComparisonDataset:
    """``n`` uniformly drawn scenarios with Bernoulli choices from the DM law."""
    dm = SimulatedDM(dm) if isinstance(dm, str) else dm
    if n < 1:
        raise ValueError("n must be at least 1")
    schema = dm.schema
    rng = make_rng(seed)
    sizes = np.array(schema.sizes)
    idx = np.floor(rng.random((n, 2, schema.d)) * sizes).astype(np.intp)
    values = schema.decode(idx)
    first, second = values[:, 0, :], values[:, 1, :]
    choice = (rng.random(n) < dm.prob(first, second)).astype(np.int8)
    return ComparisonDataset(schema, first, second, choice)


# exact Bayes accuracy --------------------------------------------------------

def _uniform(values) -> dict[float, float]:
    values = list(values)
    return {float(v): c / len(values) for v, c in Counter(values).items()}


def _convolve(*dists: dict[float, float]) -> dict[float, float]:
    out = {0.0: 1.0}
    for dist in dists:
        nxt: dict[float, float] = {}
        for a, pa in out.items():
            for b, pb in dist.items():
                nxt[a + b] = nxt.get(a + b, 0.0) + pa * pb
        out = nxt
    return out


def _difference(dist: dict[float, float]) -> dict[float, float]:
    """Distribution of X1 - X2 for independent copies of ``dist``."""
    return _convolve(dist, {-v: p for v, p in dist.items()})


def _sign_of_difference(dist: dict[float, float]) -> dict[float, float]:
    out: dict[float, float] = {}
    for v, p in _difference(dist).items():
        s = float(np.sign(v))
        out[s] = out.get(s, 0.0) + p
    return out


def _p_equal(dist: dict[float, float]) -> float:
    return sum(p * p for p in dist.values())


def bayes_accuracy(dm: SimulatedDM | str) -> float:
    """Exact E[max(p, 1 - p)] under uniform scenario sampling.

    Computed from the distribution of each law's sufficient statistic rather
    than the full cross product of scenario pairs.
    """
    dm = SimulatedDM(dm) if isinstance(dm, str) else dm
    schema = dm.schema
    deps, lyg, wait, crimes = (np.asarray(f.values) for f in schema.features)
    if dm.id == "dm1":
        k = _convolve(
            _sign_of_difference(_uniform(lyg)),
            _difference(_uniform(deps >= 1)),
            _difference(_uniform(wait > 6)),
        )
        return sum(p * float(special.ndtr(abs(v))) for v, p in k.items())
    if dm.id in ("dm2", "dm4"):
        keys = [deps >= 1, lyg, wait] if dm.id == "dm2" else [_log_bucket(lyg), deps, wait]
        p_tie = math.prod(_p_equal(_uniform(k)) for k in keys)
        return 1.0 - 0.5 * p_tie
    if dm.id == "dm3":
        points = _convolve(_uniform(_log_bucket(lyg)), _uniform(deps), _uniform(wait >= 5))
        return 1.0 - 0.5 * _p_equal(points)
    if dm.id == "dm5":
        t = _convolve(*[_sign_of_difference(_uniform(f.values)) for f in schema.features])
        return 1.0 - 0.5 * t.get(0.0, 0.0)
    # cf1: the sufficient statistic is the alternative's score
    scores = cf1_model().scores(schema.all_alternatives())
    uniq, counts = np.unique(scores, return_counts=True)
    w = counts / counts.sum()
    diff = uniq[:, None] - uniq[None, :]
    return float(np.sum(w[:, None] * w[None, :] * special.expit(np.abs(diff))))


def bayes_accuracy_bruteforce(
    prob: Callable[[np.ndarray, np.ndarray], np.ndarray], schema: FeatureSchema, chunk: int = 64
) -> float:
    """E[max(p, 1 - p)] by enumerating every ordered pair of alternatives."""
    alts = schema.all_alternatives()
    n = len(alts)
    total = 0.0
    for start in range(0, n, chunk):
        a = alts[start:start + chunk]
        first = np.repeat(a, n, axis=0)
        second = np.tile(alts, (len(a), 1))
        p = prob(first, second)
        total += float(np.sum(np.maximum(p, 1.0 - p)))
    return total / (n * n)


def dm1_transitivity_witness() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Triple where DM1 breaks sigma-transitivity by Phi(1) - 1/2.

    x1 and x3 differ only in LYG (x1 higher), x2 has the lowest LYG of the
    three: H(x1,x2) = Phi(1), H(x2,x3) = Phi(-1), so transitivity predicts 1/2
    while DM1 gives H(x1,x3) = Phi(1).
    """
    x1 = np.array([0.0, 8.0, 3.0, 1.0])
    x2 = np.array([0.0, 2.0, 3.0, 1.0])
    x3 = np.array([0.0, 5.0, 3.0, 1.0])
    return x1, x2, x3
