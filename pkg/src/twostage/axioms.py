"""Numerical audits of pairwise predictors against the choice axioms.

A probabilistic predictor is a callable ``prob(first, second)`` on ``(N, d)``
value arrays returning P(first chosen).  Sampled checks draw all their
random numbers in a single ``(n, ...)`` block, so the first ``n`` probes are
the same for any larger ``n`` and the reported maximum is monotone in ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .links import Link, as_link, link_inverse, link_pair
from .model import TwoStageModel, monotonicity_violations
from .schema import FeatureSchema
from .seeding import make_rng

ProbFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
# Inversion floor: the smallest normal float.  A 1e-12 floor would cap log-odds
# at about 27.6 and report spurious deviations for confident predictors.
CLAMP = float(np.finfo(float).tiny)
EXHAUSTIVE_LIMIT = 10**6
DEFAULT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class AxiomResult:
    axiom: str
    deviation: float
    witness: tuple[tuple[float, ...], ...] | None
    n_checked: int

    def verdict(self, threshold: float = DEFAULT_THRESHOLD) -> str:
        return "pass" if self.deviation <= threshold else "fail"

    def to_dict(self, threshold: float = DEFAULT_THRESHOLD) -> dict:
        return {
            "axiom": self.axiom,
            "deviation": self.deviation,
            "witness": None if self.witness is None else [list(w) for w in self.witness],
            "n_checked": self.n_checked,
            "verdict": self.verdict(threshold),
        }


def _sample_idx(schema: FeatureSchema, u: np.ndarray) -> np.ndarray:
    return np.floor(u * np.asarray(schema.sizes)).astype(np.intp)


def _log_odds(link: Link, prob: ProbFn, x1: np.ndarray, x2: np.ndarray, floor: float = CLAMP) -> np.ndarray:
    """sigma^{-1} H(x1, x2), inverted on the smaller tail.

    Probabilities near 1 carry no digits about their distance from 1, so when
    H(x1, x2) > 1/2 the value is taken as -sigma^{-1} H(x2, x1) (which assumes
    complementarity; that axiom is audited separately).  Tails are clamped
    at ``floor`` before inversion.
    """
    p = np.asarray(prob(x1, x2), dtype=float)
    q = np.asarray(prob(x2, x1), dtype=float)
    upper = p > q
    tail = np.clip(np.where(upper, q, p), floor, 0.5)
    z = link_inverse(link, tail)
    return np.where(upper, -z, z)


def _result(name: str, dev: np.ndarray, alts: Sequence[np.ndarray]) -> AxiomResult:
    if dev.size == 0:
        return AxiomResult(name, 0.0, None, 0)
    k = int(np.argmax(dev))
    witness = tuple(tuple(float(v) for v in a[k]) for a in alts)
    return AxiomResult(name, float(dev[k]), witness, int(dev.size))


def _check_exhaustive_size(count: int) -> None:
    if count > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive audit needs {count} probes, above the limit of {EXHAUSTIVE_LIMIT}")


def check_complementarity(
    prob: ProbFn, schema: FeatureSchema, n_samples: int = 1000, seed: int = 0, exhaustive: bool = False
) -> AxiomResult:
    """max |H(x1,x2) + H(x2,x1) - 1|, including the identical pairs x1 = x2."""
    if exhaustive:
        alts = schema.all_alternatives()
        _check_exhaustive_size(len(alts) ** 2)
        a = np.repeat(alts, len(alts), axis=0)
        b = np.tile(alts, (len(alts), 1))
    else:
        idx = _sample_idx(schema, make_rng(seed).random((n_samples, 2, schema.d)))
        vals = schema.decode(idx)
        # each sampled pair followed by the identical-pair probe of its first item
        a = np.stack([vals[:, 0], vals[:, 0]], axis=1).reshape(-1, schema.d)
        b = np.stack([vals[:, 1], vals[:, 0]], axis=1).reshape(-1, schema.d)
    dev = np.abs(np.asarray(prob(a, b)) + np.asarray(prob(b, a)) - 1.0)
    return _result("complementarity", dev, (a, b))


def check_sigma_transitivity(
    prob: ProbFn, link: Link | str, schema: FeatureSchema, n_triples: int = 1000, seed: int = 0,
    exhaustive: bool = False,
) -> AxiomResult:
    """max |H(x1,x3) - sigma(sigma^{-1} H(x1,x2) + sigma^{-1} H(x2,x3))|."""
    link = as_link(link)
    if exhaustive:
        alts = schema.all_alternatives()
        n = len(alts)
        _check_exhaustive_size(n**3)
        i1, i2, i3 = (g.ravel() for g in np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"))
        x1, x2, x3 = alts[i1], alts[i2], alts[i3]
    else:
        vals = schema.decode(_sample_idx(schema, make_rng(seed).random((n_triples, 3, schema.d))))
        x1, x2, x3 = vals[:, 0], vals[:, 1], vals[:, 2]
    implied = link_pair(link, _log_odds(link, prob, x1, x2) + _log_odds(link, prob, x2, x3))[0]
    dev = np.abs(np.asarray(prob(x1, x3)) - implied)
    return _result("sigma_transitivity", dev, (x1, x2, x3))


def _allowed_features(schema: FeatureSchema, context: int | None, features: Sequence[int] | None) -> list[int]:
    allowed = list(features) if features is not None else [i for i in range(schema.d) if i != context]
    if len(allowed) < 2:
        raise ValueError("compositionality needs at least two modifiable features")
    return allowed


def check_compositionality(
    prob: ProbFn, link: Link | str, schema: FeatureSchema, context: int | None = None,
    n_quads: int = 1000, seed: int = 0, features: Sequence[int] | None = None, exhaustive: bool = False,
) -> AxiomResult:
    """max |sigma^{-1}H(x1,x2''') - sigma^{-1}H(x1,x2') - sigma^{-1}H(x1,x2'')|.

    ``x2'`` and ``x2''`` change one feature each of ``x1`` (two distinct
    features, by default any feature outside the context) and ``x2'''``
    applies both changes.  Pass ``features`` to choose the modifiable set
    explicitly, e.g. to probe a context feature on purpose.
    """
    link = as_link(link)
    allowed = _allowed_features(schema, context, features)
    sizes = np.asarray(schema.sizes)
    if exhaustive:
        alts_idx = np.indices(sizes).reshape(schema.d, -1).T
        rows = []
        for i, j in combinations(allowed, 2):
            for di in range(1, sizes[i]):
                for dj in range(1, sizes[j]):
                    rows.append((i, j, di, dj))
        _check_exhaustive_size(len(alts_idx) * len(rows))
        mods = np.array(rows, dtype=np.intp).reshape(-1, 4)
        base = np.repeat(alts_idx, len(mods), axis=0)
        fi, fj, di, dj = (np.tile(mods[:, c], len(alts_idx)) for c in range(4))
    else:
        u = make_rng(seed).random((n_quads, schema.d + 4))
        base = _sample_idx(schema, u[:, : schema.d])
        allowed_arr = np.asarray(allowed)
        k = len(allowed)
        pi = np.floor(u[:, schema.d] * k).astype(np.intp)
        pj = np.floor(u[:, schema.d + 1] * (k - 1)).astype(np.intp)
        pj = pj + (pj >= pi)
        fi, fj = allowed_arr[pi], allowed_arr[pj]
        di = 1 + np.floor(u[:, schema.d + 2] * (sizes[fi] - 1)).astype(np.intp)
        dj = 1 + np.floor(u[:, schema.d + 3] * (sizes[fj] - 1)).astype(np.intp)
    rows_ = np.arange(len(base))
    x2a, x2b = base.copy(), base.copy()
    x2a[rows_, fi] = (base[rows_, fi] + di) % sizes[fi]
    x2b[rows_, fj] = (base[rows_, fj] + dj) % sizes[fj]
    x2c = x2a.copy()
    x2c[rows_, fj] = x2b[rows_, fj]
    x1, a, b, c = (schema.decode(z) for z in (base, x2a, x2b, x2c))
    dev = np.abs(_log_odds(link, prob, x1, c) - _log_odds(link, prob, x1, a) - _log_odds(link, prob, x1, b))
    return _result("compositionality", dev, (x1, a, b, c))


def check_monotonicity(model: TwoStageModel) -> list[tuple[str, str, tuple[str, str]]]:
    """Every adjacent pair of table entries moving against the feature's direction."""
    return monotonicity_violations(model)


def audit(
    prob: ProbFn, link: Link | str, schema: FeatureSchema, *, n_samples: int = 1000, seed: int = 0,
    context: int | None = None, model: TwoStageModel | None = None, threshold: float = DEFAULT_THRESHOLD,
) -> list[dict]:
    """Structured report over every applicable axiom."""
    report = [
        check_complementarity(prob, schema, n_samples, seed).to_dict(threshold),
        check_sigma_transitivity(prob, link, schema, n_samples, seed).to_dict(threshold),
    ]
    n_free = schema.d - (context is not None)
    if n_free >= 2:
        report.append(check_compositionality(prob, link, schema, context, n_samples, seed).to_dict(threshold))
    else:
        report.append({"axiom": "compositionality", "deviation": None, "witness": None,
                       "verdict": "not applicable"})
    if model is not None:
        bad = check_monotonicity(model)
        report.append({
            "axiom": "monotonicity",
            "deviation": float(len(bad)),
            "witness": [list(v[:2]) + list(v[2]) for v in bad[:10]] or None,
            "verdict": "pass" if not bad else "fail",
        })
    report.append({"axiom": "codomain_span", "deviation": None, "witness": None, "verdict": "not applicable"})
    return report
