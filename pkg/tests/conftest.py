import numpy as np
import pytest

from twostage.schema import FeatureSchema, FeatureSpec
from twostage.synth import synthetic_schema

# criterion label -> (passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_addoption(parser):
    parser.addoption(
        "--study-data",
        default=None,
        help="directory with Study One/Two participant CSVs (enables the real-data criterion)",
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[label]
        status = "PASS" if ok else "FAIL"
        if ok is None:
            status = "SKIP"
        terminalreporter.write_line(f"[{status}] {label}: {detail}")


@pytest.fixture
def kidney():
    return synthetic_schema()


@pytest.fixture
def deps_schema():
    return FeatureSchema((FeatureSpec("deps", (0, 1, 2)),))


@pytest.fixture
def two_feature_schema():
    return FeatureSchema((FeatureSpec("a", (0, 1, 2)), FeatureSpec("b", (0, 1, 2, 3))))


def random_tables(rng, schema, context, scale=1.0):
    """Monotone random tables (random direction per feature) for a model."""
    n_ctx = 1 if context is None else schema[context].size
    tables, dirs = {}, {}
    for i in range(schema.d):
        if i == context:
            continue
        s = int(rng.choice([-1, 1]))
        steps = rng.exponential(scale, size=(n_ctx, schema[i].size - 1))
        base = rng.normal(scale=scale, size=(n_ctx, 1))
        tables[i] = base + s * np.concatenate([np.zeros((n_ctx, 1)), np.cumsum(steps, axis=1)], axis=1)
        dirs[i] = s
    return tables, dirs
