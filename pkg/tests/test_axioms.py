import numpy as np
import pytest

from conftest import random_tables
from twostage.axioms import (
    AxiomResult,
    _log_odds,
    audit,
    check_complementarity,
    check_compositionality,
    check_monotonicity,
    check_sigma_transitivity,
)
from twostage.baselines import LinearModel
from twostage.links import Link, link_pair
from twostage.model import TwoStageModel, zero_model
from twostage.synth import DEPS, LYG, SimulatedDM, cf1_model, dm1_transitivity_witness


def const(p):
    return lambda a, b: np.full(len(a), p)


class TestComplementarity:
    def test_constant_violation(self, kidney):
        r = check_complementarity(const(0.6), kidney, 200, 0)
        assert r.deviation == pytest.approx(0.2, abs=1e-15)
        assert r.verdict() == "fail"

    def test_dm1_exact(self, kidney):
        assert check_complementarity(SimulatedDM("dm1").prob, kidney, 10_000, 0).deviation <= 1e-15

    @pytest.mark.parametrize("link", ["logistic", "probit"])
    def test_two_stage_structural(self, kidney, link):
        tables, dirs = random_tables(np.random.default_rng(1), kidney, 0)
        m = TwoStageModel(kidney, 0, tables, link, dirs)
        assert check_complementarity(m.prob, kidney, 2000, 3).deviation <= 1e-12

    def test_identical_pairs_probed(self, kidney):
        # violates only on identical pairs
        law = lambda a, b: np.where(np.all(a == b, axis=1), 0.7, 0.5)
        assert check_complementarity(law, kidney, 50, 0).deviation == pytest.approx(0.4)


class TestSigmaTransitivity:
    @pytest.mark.parametrize("link", ["logistic", "probit"])
    def test_two_stage_structural(self, kidney, link):
        tables, dirs = random_tables(np.random.default_rng(2), kidney, 2)
        m = TwoStageModel(kidney, 2, tables, link, dirs)
        assert check_sigma_transitivity(m.prob, link, kidney, 2000, 4).deviation <= 1e-9

    def test_linear_baseline(self, kidney):
        m = LinearModel(kidney, [0.3, -0.1, 0.25, -0.6])
        assert check_sigma_transitivity(m.prob, "logistic", kidney, 2000, 0).deviation <= 1e-9

    def test_dm1_violation(self, kidney):
        r = check_sigma_transitivity(SimulatedDM("dm1").prob, Link.PROBIT, kidney, 2000, 0)
        assert r.deviation >= 0.841344746068543 - 0.5 - 1e-12
        # the witness reproduces its own deviation
        x1, x2, x3 = (np.array([w]) for w in r.witness)
        law = SimulatedDM("dm1").prob
        implied = link_pair(Link.PROBIT, _log_odds(Link.PROBIT, law, x1, x2) + _log_odds(Link.PROBIT, law, x2, x3))[0]
        assert abs(law(x1, x3) - implied)[0] == pytest.approx(r.deviation, abs=1e-15)

    def test_dm1_witness_triple(self):
        x1, x2, x3 = (w[None, :] for w in dm1_transitivity_witness())
        law = SimulatedDM("dm1").prob
        implied = link_pair(Link.PROBIT, _log_odds(Link.PROBIT, law, x1, x2) + _log_odds(Link.PROBIT, law, x2, x3))[0]
        assert abs(law(x1, x3)[0] - implied[0]) == pytest.approx(0.341344746068543, abs=1e-12)

    def test_confident_model_not_saturated(self, kidney):
        # large scores: naive inversion at a 1e-12 clamp would report ~0.5
        tables, dirs = random_tables(np.random.default_rng(3), kidney, None, scale=5.0)
        m = TwoStageModel(kidney, None, tables, Link.LOGISTIC, dirs)
        assert check_sigma_transitivity(m.prob, "logistic", kidney, 2000, 0).deviation <= 1e-9


class TestCompositionality:
    def test_no_context(self, kidney):
        tables, dirs = random_tables(np.random.default_rng(5), kidney, None)
        m = TwoStageModel(kidney, None, tables, Link.LOGISTIC, dirs)
        assert check_compositionality(m.prob, "logistic", kidney, None, 2000, 0).deviation <= 1e-9

    def test_deps_context_avoiding_deps(self, kidney):
        tables, dirs = random_tables(np.random.default_rng(6), kidney, DEPS)
        m = TwoStageModel(kidney, DEPS, tables, Link.PROBIT, dirs)
        assert check_compositionality(m.prob, "probit", kidney, DEPS, 2000, 0).deviation <= 1e-9

    def test_cf1_probed_on_deps(self, kidney):
        r = check_compositionality(cf1_model().prob, "logistic", kidney, None, 2000, 0, features=[DEPS, LYG])
        assert r.deviation > 0.1

    def test_cf1_respecting_context(self, kidney):
        r = check_compositionality(cf1_model().prob, "logistic", kidney, DEPS, 2000, 0)
        assert r.deviation <= 1e-9

    def test_needs_two_features(self, deps_schema):
        with pytest.raises(ValueError):
            check_compositionality(const(0.5), "logistic", deps_schema)


class TestMonotonicity:
    def test_constructed_violation(self, deps_schema):
        m = TwoStageModel(deps_schema, None, {0: [[0.0, -1.0, 0.0]]}, directions={0: 1})
        assert check_monotonicity(m) == [("deps", "*", ("0", "1"))]

    def test_zero_model(self, kidney):
        assert check_monotonicity(zero_model(kidney, 0)) == []


class TestDeterminismAndNesting:
    def test_deterministic(self, kidney):
        law = SimulatedDM("dm3").prob
        a = check_sigma_transitivity(law, "logistic", kidney, 500, 7)
        b = check_sigma_transitivity(law, "logistic", kidney, 500, 7)
        assert a == b

    @pytest.mark.parametrize("check", ["comp", "trans", "compo"])
    def test_monotone_in_n(self, kidney, check):
        law = SimulatedDM("dm1").prob
        run = {
            "comp": lambda n: check_complementarity(lambda a, b: 0.5 + 0.1 * law(a, b), kidney, n, 3),
            "trans": lambda n: check_sigma_transitivity(law, "probit", kidney, n, 3),
            "compo": lambda n: check_compositionality(law, "probit", kidney, None, n, 3),
        }[check]
        devs = [run(n).deviation for n in (10, 50, 200, 1000)]
        assert devs == sorted(devs)


class TestExhaustive:
    def test_small_schema(self, two_feature_schema):
        tables, dirs = random_tables(np.random.default_rng(0), two_feature_schema, None)
        m = TwoStageModel(two_feature_schema, None, tables, Link.LOGISTIC, dirs)
        assert check_complementarity(m.prob, two_feature_schema, exhaustive=True).n_checked == 144
        r = check_sigma_transitivity(m.prob, "logistic", two_feature_schema, exhaustive=True)
        assert r.n_checked == 12**3 and r.deviation <= 1e-9
        r = check_compositionality(m.prob, "logistic", two_feature_schema, exhaustive=True)
        assert r.n_checked == 12 * 2 * 3 and r.deviation <= 1e-9

    def test_limit(self, kidney):
        with pytest.raises(ValueError):
            check_sigma_transitivity(const(0.5), "logistic", kidney, exhaustive=True)


def test_audit_report(kidney):
    m = zero_model(kidney, DEPS)
    report = audit(m.prob, "logistic", kidney, n_samples=100, context=DEPS, model=m)
    by_name = {r["axiom"]: r for r in report}
    assert set(by_name) == {"complementarity", "sigma_transitivity", "compositionality", "monotonicity",
                            "codomain_span"}
    assert by_name["codomain_span"]["verdict"] == "not applicable"
    assert all(by_name[k]["verdict"] == "pass" for k in by_name if k != "codomain_span")


def test_result_dict():
    r = AxiomResult("x", 0.5, ((1.0, 2.0),), 3)
    assert r.to_dict(threshold=1.0) == {"axiom": "x", "deviation": 0.5, "witness": [[1.0, 2.0]],
                                        "n_checked": 3, "verdict": "pass"}
