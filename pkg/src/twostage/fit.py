"""Learning monotone editing tables from pairwise comparisons.

Tables are parameterized per (feature, context value) by a base score and
nonnegative increments between consecutive domain values::

    h(v_0) = base,   h(v_k) = base + s * sum_{j<=k} delta_j,   delta_j >= 0

with one direction ``s`` per feature shared by all contexts.  The base of the
first context value is pinned to 0, which removes each feature's additive
gauge.  Monotonicity therefore reduces to a box constraint and the fit is a
projected gradient descent.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DatasetError, FitError, LinkError
from .evaluation import credit_halves
from .links import Link, as_link, link_pair
from .model import TwoStageModel
from .optim import minimize_projected
from .schema import ComparisonDataset, FeatureSchema, split_dataset
from .seeding import derive_seed, make_rng

log = logging.getLogger(__name__)

CLAMP = 1e-12
LOSSES = ("cross_entropy", "hinge")
_LOSS_ALIASES = {"ce": "cross_entropy", "cross_entropy": "cross_entropy", "hinge": "hinge"}


@dataclass(frozen=True)
class FitConfig:
    loss: str = "cross_entropy"
    link: Link | None = None
    lam: float = 1e-3
    ftol: float = 1e-7
    max_iter: int = 300
    cv_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        loss = _LOSS_ALIASES.get(self.loss)
        if loss is None:
            raise ValueError(f"unknown loss {self.loss!r}")
        object.__setattr__(self, "loss", loss)
        default = Link.LOGISTIC if loss == "cross_entropy" else Link.IDENTITY
        link = default if self.link is None else as_link(self.link)
        if (loss == "hinge") != (link is Link.IDENTITY):
            raise LinkError(f"loss {loss} is incompatible with link {link.value}")
        object.__setattr__(self, "link", link)
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")
        if not 0 < self.cv_fraction < 1:
            raise ValueError("cv_fraction must lie in (0, 1)")
        if self.max_iter < 0 or not self.ftol >= 0:
            raise ValueError("max_iter and ftol must be nonnegative")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["link"] = self.link.value
        out["lambda"] = out.pop("lam")
        return out


@dataclass
class MonotoneParams:
    """Bases ``(C,)`` and increments ``(C, m-1)`` per table feature, plus directions."""

    bases: dict[int, np.ndarray]
    increments: dict[int, np.ndarray]
    directions: dict[int, int]

    def tables(self) -> dict[int, np.ndarray]:
        out = {}
        for i, inc in self.increments.items():
            steps = np.concatenate([np.zeros((inc.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)
            out[i] = self.bases[i][:, None] + self.directions[i] * steps
        return out


class _Layout:
    """Flat parameter vector layout: per feature, free bases then increments."""

    def __init__(self, schema: FeatureSchema, context: int | None):
        self.features = [i for i in range(schema.d) if i != context]
        self.n_ctx = 1 if context is None else schema[context].size
        self.sizes = {i: schema[i].size for i in self.features}
        self.base_slices, self.inc_slices = {}, {}
        pos = 0
        for i in self.features:
            nb = self.n_ctx - 1
            self.base_slices[i] = slice(pos, pos + nb)
            pos += nb
            ni = self.n_ctx * (self.sizes[i] - 1)
            self.inc_slices[i] = slice(pos, pos + ni)
            pos += ni
        self.size = pos
        mask = np.zeros(pos, dtype=bool)
        for sl in self.inc_slices.values():
            mask[sl] = True
        self.increment_mask = mask

    def unpack(self, theta: np.ndarray, directions: dict[int, int]) -> MonotoneParams:
        bases, incs = {}, {}
        for i in self.features:
            bases[i] = np.concatenate([[0.0], theta[self.base_slices[i]]])
            incs[i] = theta[self.inc_slices[i]].reshape(self.n_ctx, self.sizes[i] - 1)
        return MonotoneParams(bases, incs, dict(directions))

    def pack(self, params: MonotoneParams) -> np.ndarray:
        theta = np.empty(self.size)
        for i in self.features:
            theta[self.base_slices[i]] = params.bases[i][1:]
            theta[self.inc_slices[i]] = params.increments[i].ravel()
        return theta

    def chain(self, table_grads: dict[int, np.ndarray], directions: dict[int, int]) -> np.ndarray:
        """Map gradients w.r.t. table entries to gradients w.r.t. the flat parameters."""
        g = np.empty(self.size)
        for i in self.features:
            G = table_grads[i]
            g[self.base_slices[i]] = G.sum(axis=1)[1:]
            tail = np.cumsum(G[:, ::-1], axis=1)[:, ::-1]
            g[self.inc_slices[i]] = (directions[i] * tail[:, 1:]).ravel()
        return g


class _Objective:
    """Data loss plus context-smoothing regularizer over a fixed dataset."""

    def __init__(self, dataset: ComparisonDataset, config: FitConfig, context: int | None):
        self.layout = _Layout(dataset.schema, context)
        self.config = config
        self.choice = dataset.choice.astype(float)
        n = len(dataset)
        ca = np.zeros(n, dtype=np.intp) if context is None else dataset.first_idx[:, context]
        cb = np.zeros(n, dtype=np.intp) if context is None else dataset.second_idx[:, context]
        self.flat_a, self.flat_b = {}, {}
        for i in self.layout.features:
            m = self.layout.sizes[i]
            self.flat_a[i] = ca * m + dataset.first_idx[:, i]
            self.flat_b[i] = cb * m + dataset.second_idx[:, i]
        self.saturated = 0

    def _data_term(self, diff: np.ndarray) -> tuple[float, np.ndarray]:
        r = self.choice
        if self.config.loss == "hinge":
            y = 2.0 * r - 1.0
            margin = 1.0 - y * diff
            active = margin > 0
            return float(np.sum(margin[active])), np.where(active, -y, 0.0)
        p, q, dens = link_pair(self.config.link, diff)
        p_sat, q_sat = p < CLAMP, q < CLAMP
        self.saturated = int(np.sum((r == 1) & p_sat) + np.sum((r == 0) & q_sat))
        pc, qc = np.maximum(p, CLAMP), np.maximum(q, CLAMP)
        value = -float(np.sum(r * np.log(pc) + (1.0 - r) * np.log(qc)))
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(r == 1, np.where(p_sat, 0.0, -dens / pc), np.where(q_sat, 0.0, dens / qc))
        return value, g

    def table_value_and_grad(self, tables: dict[int, np.ndarray]) -> tuple[float, dict[int, np.ndarray]]:
        lay = self.layout
        diff = np.zeros(len(self.choice))
        for i in lay.features:
            flat = tables[i].ravel()
            diff += flat[self.flat_a[i]] - flat[self.flat_b[i]]
        value, g = self._data_term(diff)
        grads = {}
        for i in lay.features:
            size = lay.n_ctx * lay.sizes[i]
            G = np.bincount(self.flat_a[i], weights=g, minlength=size) - np.bincount(
                self.flat_b[i], weights=g, minlength=size
            )
            grads[i] = G.reshape(lay.n_ctx, lay.sizes[i])
        lam = self.config.lam
        if lam > 0 and lay.n_ctx > 1:
            for i in lay.features:
                T = tables[i]
                # explicit pairwise differences keep identical tables at exactly zero
                D = T[:, None, :] - T[None, :, :]
                value += 0.5 * lam * float(np.sum(D * D))
                grads[i] = grads[i] + 2.0 * lam * D.sum(axis=1)
        return value, grads

    def __call__(self, theta: np.ndarray, directions: dict[int, int]) -> tuple[float, np.ndarray]:
        params = self.layout.unpack(theta, directions)
        value, grads = self.table_value_and_grad(params.tables())
        return value, self.layout.chain(grads, directions)


def regularizer(tables: dict[int, np.ndarray], lam: float) -> float:
    """lam * sum over features and unordered context pairs of squared table differences."""
    total = 0.0
    for T in tables.values():
        C = T.shape[0]
        for a in range(C):
            for b in range(a + 1, C):
                total += float(np.sum((T[a] - T[b]) ** 2))
    return lam * total


def loss_and_gradient(
    params: MonotoneParams, dataset: ComparisonDataset, config: FitConfig, context: int | None
) -> tuple[float, np.ndarray]:
    """Objective value and its exact gradient w.r.t. the flat (bases, increments) vector."""
    obj = _Objective(dataset, config, context)
    return obj(obj.layout.pack(params), params.directions)


def zero_params(schema: FeatureSchema, context: int | None, directions: dict[int, int] | None = None) -> MonotoneParams:
    lay = _Layout(schema, context)
    dirs = {i: 1 for i in lay.features} | dict(directions or {})
    return lay.unpack(np.zeros(lay.size), dirs)


@dataclass
class FitOutcome:
    model: TwoStageModel
    params: MonotoneParams
    history: list[float] = field(default_factory=list)
    pilot_history: list[float] = field(default_factory=list)


def _check_inputs(dataset: ComparisonDataset, context: int | None) -> None:
    if len(dataset) == 0:
        raise DatasetError("cannot fit on an empty dataset")
    if context is not None and not 0 <= context < dataset.schema.d:
        raise ValueError(f"context index {context} out of range")
    if context is not None and dataset.schema.d < 2:
        raise ValueError("a context needs at least one other feature")


def fit_detailed(dataset: ComparisonDataset, config: FitConfig, context: int | None = None) -> FitOutcome:
    """Two-phase fit; see ``fit_tables``.  Also returns parameters and loss histories."""
    _check_inputs(dataset, context)
    schema = dataset.schema
    obj = _Objective(dataset, config, context)
    lay = obj.layout
    hinted = {i: schema[i].hint_sign for i in lay.features if schema[i].hint_sign is not None}
    directions = {i: hinted.get(i, 1) for i in lay.features}
    theta0 = np.zeros(lay.size)
    pilot_history: list[float] = []

    if len(hinted) < len(lay.features):
        # Pilot: increments free in sign, seeded jitter breaks exact ties.
        rng = make_rng(derive_seed(config.seed, "pilot"))
        start = np.where(lay.increment_mask, rng.normal(scale=1e-3, size=lay.size), 0.0)
        ones = {i: 1 for i in lay.features}
        pilot = minimize_projected(
            lambda th: obj(th, ones), start, ftol=config.ftol, max_iter=config.max_iter // 3
        )
        pilot_history = pilot.history
        pparams = lay.unpack(pilot.x, ones)
        for i in lay.features:
            if i not in hinted:
                trend = float(pparams.increments[i].sum())
                directions[i] = -1 if trend < 0 else 1
        warm = MonotoneParams(
            pparams.bases,
            {i: np.maximum(directions[i] * inc, 0.0) for i, inc in pparams.increments.items()},
            directions,
        )
        theta0 = lay.pack(warm)

    mask = lay.increment_mask

    def project(th):
        return np.where(mask, np.maximum(th, 0.0), th)

    res = minimize_projected(lambda th: obj(th, directions), theta0, project, ftol=config.ftol, max_iter=config.max_iter)
    if not np.isfinite(res.fun):
        raise FitError("fit diverged: non-finite loss")
    params = lay.unpack(res.x, directions)
    obj(res.x, directions)  # refresh saturation count at the solution
    meta = {
        **config.to_dict(),
        "omega": None if context is None else schema[context].name,
        "train_loss": res.fun,
        "iterations": res.n_iter,
        "pilot_iterations": max(len(pilot_history) - 1, 0),
        "converged": res.converged,
        "saturated": obj.saturated,
    }
    model = TwoStageModel(schema, context, params.tables(), config.link, directions, meta)
    return FitOutcome(model, params, res.history, pilot_history)


def fit_tables(dataset: ComparisonDataset, config: FitConfig, context: int | None = None) -> TwoStageModel:
    """Fit monotone editing tables by constrained loss minimization.

    Phase 1 fits with sign-free increments for ``max_iter // 3`` iterations
    and picks each feature's direction from the sign of its total fitted
    trend (schema ``monotone_hint`` overrides).  Phase 2 runs projected
    gradient descent with increments clipped at zero, warm-started from the
    projected pilot solution.
    """
    return fit_detailed(dataset, config, context).model


def _fit_candidate(args):
    train, config, context = args
    try:
        return fit_tables(train, config, context), None
    except Exception as exc:
        return None, f"{type(exc).__name__}: {exc}"


def select_context(dataset: ComparisonDataset, config: FitConfig, jobs: int = 1) -> tuple[int | None, TwoStageModel]:
    """Choose the context feature (or none) by holdout 0-1 error, then refit on all data.

    Candidates are no context followed by each feature in schema order; ties
    keep the earlier candidate.  Holdout error counts ties as half an error.
    """
    _check_inputs(dataset, None)
    schema = dataset.schema
    train, hold = split_dataset(dataset, 1.0 - config.cv_fraction, derive_seed(config.seed, "context-holdout"))
    candidates: list[int | None] = [None] + (list(range(schema.d)) if schema.d >= 2 else [])
    tasks = [(train, config, c) for c in candidates]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fit_candidate, tasks))
    else:
        results = [_fit_candidate(t) for t in tasks]
    best, best_credit, report = None, -1, {}
    for c, (model, err) in zip(candidates, results):
        label = "none" if c is None else schema[c].name
        if model is None:
            log.warning("context candidate %s failed: %s", label, err)
            report[label] = None
            continue
        credit = credit_halves(model.choices(hold.first, hold.second), hold.choice)
        report[label] = 1.0 - credit / (2 * len(hold))
        if credit > best_credit:
            best, best_credit = c, credit
    if best_credit < 0:
        raise FitError("every context candidate failed to fit")
    model = fit_tables(dataset, config, best)
    return best, model.with_metadata(context_selection=report)
