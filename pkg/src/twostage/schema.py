"""Feature schemas, alternatives and pairwise comparison datasets.

A dataset is stored column-wise: ``first`` and ``second`` are ``(N, d)``
float arrays of feature values and ``choice`` is an ``(N,)`` array with 1
when the first alternative was chosen.  Value indices into each feature's
ordered domain are computed once at construction and used by the models.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DatasetError, SchemaError
from .seeding import make_rng

MONOTONE_HINTS = ("auto", "increasing", "decreasing")
_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def format_value(v: float) -> str:
    """Canonical text for a domain value: integers without a decimal point."""
    v = float(v)
    if v.is_integer():
        return str(int(v))
    return repr(v)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    values: tuple[float, ...]
    monotone_hint: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def hint_sign(self) -> int | None:
        return {"increasing": 1, "decreasing": -1}.get(self.monotone_hint)


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))

    @property
    def d(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def sizes(self) -> list[int]:
        return [f.size for f in self.features]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(f"no feature named {name!r}")

    def __getitem__(self, i: int) -> FeatureSpec:
        return self.features[i]

    def n_alternatives(self) -> int:
        return math.prod(self.sizes)

    @cached_property
    def _lookup(self) -> list[dict[float, int]]:
        return [{v: k for k, v in enumerate(f.values)} for f in self.features]

    def encode(self, values: np.ndarray) -> np.ndarray:
        """Map an ``(N, d)`` array of feature values to domain indices.

        Raises ``DatasetError`` naming the first offending row (1-based) and
        feature when a value is not an exact member of its domain.
        """
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.d:
            raise DatasetError(f"expected shape (N, {self.d}), got {values.shape}")
        out = np.empty(values.shape, dtype=np.intp)
        for i, f in enumerate(self.features):
            dom = np.asarray(f.values)
            col = values[:, i]
            pos = np.clip(np.searchsorted(dom, col), 0, f.size - 1)
            bad = dom[pos] != col
            if bad.any():
                row = int(np.argmax(bad))
                raise DatasetError(
                    f"value {format_value(col[row]) if np.isfinite(col[row]) else col[row]} "
                    f"not in domain of {f.name} (row {row + 1})"
                )
            out[:, i] = pos
        return out

    def decode(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.intp)
        out = np.empty(indices.shape, dtype=float)
        for i, f in enumerate(self.features):
            out[..., i] = np.asarray(f.values)[indices[..., i]]
        return out

    def all_alternatives(self) -> np.ndarray:
        """Every alternative of the cross product, as an ``(|X|, d)`` value array."""
        grids = np.meshgrid(*[np.asarray(f.values) for f in self.features], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "values": [_json_number(v) for v in f.values], "monotone_hint": f.monotone_hint}
                for f in self.features
            ]
        }

    @classmethod
    def from_dict(cls, obj: dict, *, check: bool = True) -> "FeatureSchema":
        try:
            feats = tuple(
                FeatureSpec(str(f["name"]), tuple(f["values"]), str(f.get("monotone_hint", "auto")))
                for f in obj["features"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed schema: {exc}") from exc
        schema = cls(feats)
        if check:
            problems = validate_schema(schema)
            if problems:
                raise SchemaError("; ".join(problems))
        return schema


def _json_number(v: float):
    return int(v) if float(v).is_integer() else float(v)


def validate_schema(schema: FeatureSchema) -> list[str]:
    """Return every invariant violation of ``schema``; an empty list means ok."""
    problems: list[str] = []
    if schema.d < 1:
        problems.append("schema has no features")
    seen: set[str] = set()
    for f in schema.features:
        if f.name in seen:
            problems.append(f"feature {f.name!r}: duplicate feature name")
        seen.add(f.name)
        if not _IDENTIFIER.match(f.name):
            problems.append(f"feature {f.name!r}: name is not an identifier")
        if len(f.values) < 2:
            problems.append(f"feature {f.name!r}: needs at least 2 values")
        if not all(math.isfinite(v) for v in f.values):
            problems.append(f"feature {f.name!r}: values must be finite")
        elif any(b <= a for a, b in zip(f.values, f.values[1:])):
            problems.append(f"feature {f.name!r}: values not strictly increasing")
        if f.monotone_hint not in MONOTONE_HINTS:
            problems.append(f"feature {f.name!r}: unknown monotone_hint {f.monotone_hint!r}")
    return problems


def load_schema(path: str | Path) -> FeatureSchema:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return FeatureSchema.from_dict(obj)


def dump_schema(schema: FeatureSchema) -> str:
    return json.dumps(schema.to_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class Alternative:
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def is_valid(self, schema: FeatureSchema) -> bool:
        return len(self.values) == schema.d and all(
            v in f.values for v, f in zip(self.values, schema.features)
        )


@dataclass(frozen=True)
class ComparisonRecord:
    first: Alternative
    second: Alternative
    choice: int


@dataclass(frozen=True, eq=False)
class ComparisonDataset:
    """Immutable sequence of ``(first, second, choice)`` records under one schema."""

    schema: FeatureSchema
    first: np.ndarray
    second: np.ndarray
    choice: np.ndarray
    first_idx: np.ndarray = field(init=False, repr=False)
    second_idx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.schema.d
        first = np.array(self.first, dtype=float).reshape(-1, d)
        second = np.array(self.second, dtype=float).reshape(-1, d)
        choice = np.array(self.choice, dtype=np.int8).reshape(-1)
        if not (len(first) == len(second) == len(choice)):
            raise DatasetError("first, second and choice must have the same length")
        if np.any((choice != 0) & (choice != 1)):
            raise DatasetError("choice must be 0 or 1")
        for name, arr in (("first", first), ("second", second), ("choice", choice)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        fi, si = self.schema.encode(first), self.schema.encode(second)
        fi.setflags(write=False)
        si.setflags(write=False)
        object.__setattr__(self, "first_idx", fi)
        object.__setattr__(self, "second_idx", si)

    @classmethod
    def from_records(cls, schema: FeatureSchema, records: Iterable[ComparisonRecord]) -> "ComparisonDataset":
        records = list(records)
        return cls(
            schema,
            np.array([r.first.values for r in records], dtype=float).reshape(-1, schema.d),
            np.array([r.second.values for r in records], dtype=float).reshape(-1, schema.d),
            np.array([r.choice for r in records], dtype=np.int8),
        )

    @property
    def records(self) -> list[ComparisonRecord]:
        return [
            ComparisonRecord(Alternative(a), Alternative(b), int(c))
            for a, b, c in zip(self.first, self.second, self.choice)
        ]

    def __len__(self) -> int:
        return len(self.choice)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "ComparisonDataset":
        indices = np.asarray(indices, dtype=np.intp)
        return ComparisonDataset(self.schema, self.first[indices], self.second[indices], self.choice[indices])

    def canonical_order(self) -> np.ndarray:
        """Row indices sorting records lexicographically by (first, second, choice)."""
        keys = np.column_stack([self.first, self.second, self.choice.astype(float)])
        return np.lexsort(keys.T[::-1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComparisonDataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.first, other.first)
            and np.array_equal(self.second, other.second)
            and np.array_equal(self.choice, other.choice)
        )


def dataset_header(schema: FeatureSchema) -> list[str]:
    return [f"a_{n}" for n in schema.names] + [f"b_{n}" for n in schema.names] + ["choice"]


def parse_dataset(text: str | io.TextIOBase, schema: FeatureSchema) -> ComparisonDataset:
    """Parse the dataset CSV format.

    Lines starting with ``#`` are comments.  Columns are matched by name, so
    the header must contain exactly ``a_<f>``/``b_<f>`` for every feature plus
    ``choice``.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DatasetError("malformed header: empty input")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    expected = dataset_header(schema)
    missing = [c for c in expected if c not in header]
    if missing:
        raise DatasetError(f"malformed header: missing column(s) {', '.join(missing)}")
    extra = [c for c in header if c not in expected]
    if extra or len(header) != len(expected):
        raise DatasetError(f"malformed header: unexpected column(s) {', '.join(extra) or '(duplicates)'}")
    pos = [header.index(c) for c in expected]
    d = schema.d
    first, second, choice = [], [], []
    for rowno, row in enumerate(reader, start=1):
        if len(row) != len(header):
            raise DatasetError(f"row {rowno}: expected {len(header)} fields, got {len(row)}")
        cells = [row[p].strip() for p in pos]
        vals = []
        for col, cell in zip(expected[:-1], cells[:-1]):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"non-numeric value {cell!r} in column {col} (row {rowno})") from None
            spec = schema.features[schema.index(col[2:])]
            if v not in spec.values:
                raise DatasetError(f"value {cell} not in domain of {spec.name} (row {rowno})")
            vals.append(v)
        if cells[-1] not in ("0", "1"):
            raise DatasetError(f"choice {cells[-1]!r} not in {{0,1}} (row {rowno})")
        first.append(vals[:d])
        second.append(vals[d:])
        choice.append(int(cells[-1]))
    return ComparisonDataset(
        schema,
        np.array(first, dtype=float).reshape(-1, d),
        np.array(second, dtype=float).reshape(-1, d),
        np.array(choice, dtype=np.int8),
    )


def serialize_dataset(dataset: ComparisonDataset, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dataset_header(dataset.schema))
    for a, b, c in zip(dataset.first, dataset.second, dataset.choice):
        writer.writerow([format_value(v) for v in a] + [format_value(v) for v in b] + [int(c)])
    return buf.getvalue()


def load_dataset(path: str | Path, schema: FeatureSchema) -> ComparisonDataset:
    return parse_dataset(Path(path).read_text(encoding="utf-8"), schema)


def split_dataset(
    dataset: ComparisonDataset, train_fraction: float, seed: int
) -> tuple[ComparisonDataset, ComparisonDataset]:
    """Seeded random train/test split.

    The permutation is numpy's ``Generator.permutation`` (a Fisher-Yates
    shuffle) on a PCG64 stream seeded with ``seed``; the first
    ``floor(train_fraction * N)`` permuted rows form the training set.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = len(dataset)
    n_train = math.floor(train_fraction * n)
    if n_train == 0 or n_train == n:
        raise DatasetError(f"split of {n} records at fraction {train_fraction} leaves an empty side")
    perm = make_rng(seed).permutation(n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])
