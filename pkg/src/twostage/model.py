"""Two-stage factored choice model.

``H(x1, x2) = sigma(S(x1) - S(x2))`` where ``S(x)`` sums one editing table per
non-context feature, each table looked up at the alternative's own context
value.  The context feature (at most one) has no table of its own.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import LinkError, ModelFormatError
from .links import Link, as_link, link_pair
from .schema import Alternative, FeatureSchema, format_value

NO_CONTEXT = "*"


class Choice(enum.IntEnum):
    SECOND = -1
    TIE = 0
    FIRST = 1


@dataclass(frozen=True, eq=False)
class TwoStageModel:
    """Editing tables plus link.

    ``tables[i]`` is a ``(n_contexts, n_values_i)`` array for every feature
    ``i`` other than ``context``; ``n_contexts`` is 1 when there is no context.
    ``directions[i]`` is +1 (nondecreasing) or -1 (nonincreasing).
    """

    schema: FeatureSchema
    context: int | None
    tables: dict[int, np.ndarray]
    link: Link = Link.LOGISTIC
    directions: dict[int, int] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "link", as_link(self.link))
        if self.context is not None and not 0 <= self.context < self.schema.d:
            raise ModelFormatError(f"context index {self.context} out of range")
        n_ctx = self.n_contexts
        tables = {}
        for i in self.table_features:
            if i not in self.tables:
                raise ModelFormatError(f"missing table for feature {self.schema[i].name}")
            t = np.array(self.tables[i], dtype=float)
            if t.shape != (n_ctx, self.schema[i].size):
                raise ModelFormatError(
                    f"table for {self.schema[i].name} has shape {t.shape}, expected {(n_ctx, self.schema[i].size)}"
                )
            if not np.all(np.isfinite(t)):
                raise ModelFormatError(f"non-finite entry in table for {self.schema[i].name}")
            t.setflags(write=False)
            tables[i] = t
        extra = set(self.tables) - set(tables)
        if extra:
            raise ModelFormatError(f"unexpected tables for feature indices {sorted(extra)}")
        object.__setattr__(self, "tables", tables)
        dirs = {i: int(self.directions.get(i, _trend_sign(tables[i]))) for i in tables}
        if any(s not in (1, -1) for s in dirs.values()):
            raise ModelFormatError("directions must be +1 or -1")
        object.__setattr__(self, "directions", dirs)

    @property
    def table_features(self) -> list[int]:
        return [i for i in range(self.schema.d) if i != self.context]

    @property
    def n_contexts(self) -> int:
        return 1 if self.context is None else self.schema[self.context].size

    def context_labels(self) -> list[str]:
        if self.context is None:
            return [NO_CONTEXT]
        return [format_value(v) for v in self.schema[self.context].values]

    # vectorized evaluation -------------------------------------------------

    def scores_idx(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.intp)
        ctx = np.zeros(len(idx), dtype=np.intp) if self.context is None else idx[:, self.context]
        s = np.zeros(len(idx))
        for i, t in self.tables.items():
            s += t[ctx, idx[:, i]]
        return s

    def scores(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return self.scores_idx(self.schema.encode(values))

    def differences(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        return self.scores(first) - self.scores(second)

    def prob(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        if not self.link.probabilistic:
            raise LinkError("identity-link model has no choice probabilities")
        return link_pair(self.link, self.differences(first, second))[0]

    def choices(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        return np.sign(self.differences(first, second)).astype(np.int8)

    __call__ = choices

    def with_metadata(self, **extra) -> "TwoStageModel":
        return TwoStageModel(self.schema, self.context, self.tables, self.link, self.directions,
                             {**self.metadata, **extra})


def _trend_sign(table: np.ndarray) -> int:
    trend = float(np.sum(table[:, -1] - table[:, 0]))
    return -1 if trend < 0 else 1


def zero_model(schema: FeatureSchema, context: int | None = None, link: Link | str = Link.LOGISTIC) -> TwoStageModel:
    n_ctx = 1 if context is None else schema[context].size
    tables = {i: np.zeros((n_ctx, schema[i].size)) for i in range(schema.d) if i != context}
    return TwoStageModel(schema, context, tables, as_link(link))


def _values(x: Alternative | Sequence[float]) -> np.ndarray:
    vals = x.values if isinstance(x, Alternative) else x
    return np.asarray(vals, dtype=float).reshape(1, -1)


def inner_score(model: TwoStageModel, x: Alternative | Sequence[float]) -> float:
    return float(model.scores(_values(x))[0])


def predict_prob(model: TwoStageModel, x1, x2) -> float:
    return float(model.prob(_values(x1), _values(x2))[0])


def predict_choice(model: TwoStageModel, x1, x2) -> Choice:
    return Choice(int(model.choices(_values(x1), _values(x2))[0]))


def rank_distribution(model: TwoStageModel, items: Sequence) -> np.ndarray:
    """Probability that each item is chosen as best among ``items`` (softmax of scores)."""
    if model.link is not Link.LOGISTIC:
        raise LinkError("ranking distribution is defined for the logistic link only")
    if len(items) < 2:
        raise ValueError("need at least two items")
    values = np.vstack([_values(x) for x in items])
    return special.softmax(model.scores(values))


# gauge & monotonicity ------------------------------------------------------

def gauge_normalized(model: TwoStageModel) -> dict[int, np.ndarray]:
    """Tables with each feature's overall mean (across all contexts) subtracted."""
    return {i: t - t.mean() for i, t in model.tables.items()}


def monotonicity_violations(model: TwoStageModel) -> list[tuple[str, str, tuple[str, str]]]:
    """Adjacent table entries that break the feature's declared direction.

    Each violation is ``(feature, context, (value_k, value_k+1))``.
    """
    out = []
    labels = model.context_labels()
    for i, t in model.tables.items():
        s = model.directions[i]
        vals = [format_value(v) for v in model.schema[i].values]
        steps = s * np.diff(t, axis=1)
        for c, k in zip(*np.nonzero(steps < 0)):
            out.append((model.schema[i].name, labels[c], (vals[k], vals[k + 1])))
    return out


# serialization --------------------------------------------------------------

def _num(v: float):
    return float(v)


def model_to_dict(model: TwoStageModel) -> dict:
    labels = model.context_labels()
    tables = {}
    for i, t in model.tables.items():
        f = model.schema[i]
        tables[f.name] = {
            labels[c]: {format_value(v): _num(t[c, k]) for k, v in enumerate(f.values)}
            for c in range(model.n_contexts)
        }
    return {
        "link": model.link.value,
        "omega": None if model.context is None else model.schema[model.context].name,
        "features": model.schema.to_dict()["features"],
        "tables": tables,
        "directions": {model.schema[i].name: s for i, s in model.directions.items()},
        "metadata": model.metadata,
    }


def export_model(model: TwoStageModel) -> str:
    # json writes floats with repr(), which round-trips exactly.
    return json.dumps(model_to_dict(model), indent=2, sort_keys=False) + "\n"


def model_from_dict(obj: dict) -> TwoStageModel:
    try:
        schema = FeatureSchema.from_dict({"features": obj["features"]})
        link = as_link(obj["link"])
        omega = obj.get("omega")
        context = None if omega is None else schema.index(omega)
        raw_tables = obj["tables"]
    except LinkError as exc:
        raise ModelFormatError(str(exc)) from None
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None
    n_ctx = 1 if context is None else schema[context].size
    labels = [NO_CONTEXT] if context is None else [format_value(v) for v in schema[context].values]
    tables = {}
    for i in range(schema.d):
        if i == context:
            continue
        f = schema[i]
        if f.name not in raw_tables:
            raise ModelFormatError(f"missing table for feature {f.name}")
        t = np.empty((n_ctx, f.size))
        for c, lab in enumerate(labels):
            entries = raw_tables[f.name].get(lab)
            if entries is None:
                raise ModelFormatError(f"missing table entries for feature {f.name}, context {lab}")
            for k, v in enumerate(f.values):
                key = format_value(v)
                if key not in entries:
                    raise ModelFormatError(f"missing table entry {f.name}={key} in context {lab}")
                t[c, k] = float(entries[key])
        tables[i] = t
    extra = set(raw_tables) - {schema[i].name for i in tables}
    if extra:
        raise ModelFormatError(f"tables for unknown or context features: {sorted(extra)}")
    dirs = {}
    for name, s in (obj.get("directions") or {}).items():
        try:
            dirs[schema.index(name)] = int(s)
        except KeyError:
            raise ModelFormatError(f"direction for unknown feature {name}") from None
    model = TwoStageModel(schema, context, tables, link, dirs, dict(obj.get("metadata") or {}))
    bad = monotonicity_violations(model)
    if bad:
        name, ctx, (a, b) = bad[0]
        raise ModelFormatError(f"table for feature {name} in context {ctx} is not monotone between {a} and {b}")
    return model


def import_model(text: str) -> TwoStageModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must hold a JSON object")
    return model_from_dict(obj)


def export_editing_curves(model: TwoStageModel) -> str:
    """CSV ``feature,context,value,score`` of gauge-normalized tables."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "context", "value", "score"])
    labels = model.context_labels()
    for i, t in sorted(gauge_normalized(model).items()):
        f = model.schema[i]
        for c, lab in enumerate(labels):
            for k, v in enumerate(f.values):
                w.writerow([f.name, lab, format_value(v), repr(float(t[c, k]))])
    return buf.getvalue()
