import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twostage.errors import LinkError
from twostage.links import complete_transitive, link_eval, link_inverse

mpmath.mp.dps = 40


def mp_ncdf(u):
    return float(mpmath.ncdf(u))


class TestLinkEval:
    def test_logistic_symmetry_point(self):
        assert link_eval("logistic", 0.0) == 0.5

    def test_probit_at_one_matches_mpmath(self):
        assert link_eval("probit", 1.0) == pytest.approx(mp_ncdf(1), abs=1e-15)
        assert link_eval("probit", 1.0) == pytest.approx(0.84134, abs=1e-5)

    def test_logistic_log3(self):
        assert link_eval("logistic", math.log(3)) == pytest.approx(0.75, abs=1e-15)

    @pytest.mark.parametrize("u", np.linspace(-8, 8, 33))
    def test_probit_accuracy(self, u):
        assert abs(link_eval("probit", u) - mp_ncdf(u)) <= 1e-12

    @pytest.mark.parametrize("link", ["logistic", "probit"])
    def test_symmetry(self, link):
        u = np.linspace(-30, 30, 2001)
        assert np.max(np.abs(link_eval(link, u) + link_eval(link, -u) - 1)) <= 1e-12

    def test_identity_rejected(self):
        with pytest.raises(LinkError):
            link_eval("identity", 0.3)

    def test_unknown_link(self):
        with pytest.raises(LinkError):
            link_eval("cauchy", 0.0)


class TestLinkInverse:
    def test_logistic_half(self):
        assert link_inverse("logistic", 0.5) == 0.0

    def test_logistic_three_quarters(self):
        assert link_inverse("logistic", 0.75) == pytest.approx(math.log(3), abs=1e-12)

    def test_probit_example(self):
        assert link_inverse("probit", 0.84134) == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(LinkError):
            link_inverse("logistic", p)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-9, 1 - 1e-9), st.sampled_from(["logistic", "probit"]))
    def test_two_sided_inverse(self, p, link):
        assert abs(link_eval(link, link_inverse(link, p)) - p) <= 1e-10
        assert abs(link_inverse(link, 1 - p) + link_inverse(link, p)) <= 1e-6 * max(1, abs(link_inverse(link, p)))

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-8, 8), st.sampled_from(["logistic", "probit"]))
    def test_inverse_of_eval(self, u, link):
        assert abs(link_inverse(link, link_eval(link, u)) - u) <= 1e-10 * max(1.0, 1 / link_eval(link, -abs(u)))


class TestCompleteTransitive:
    def test_half_half(self):
        assert complete_transitive("logistic", 0.5, 0.5) == 0.5

    def test_three_quarters(self):
        assert complete_transitive("logistic", 0.75, 0.75) == pytest.approx(0.9, abs=1e-12)

    def test_probit_additivity(self):
        p = mp_ncdf(1)
        assert complete_transitive("probit", p, p) == pytest.approx(mp_ncdf(2), abs=1e-12)
        assert mp_ncdf(2) == pytest.approx(0.9772, abs=1e-4)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.sampled_from(["logistic", "probit"]))
    def test_symmetric_and_complement(self, p, q, link):
        assert complete_transitive(link, p, q) == pytest.approx(complete_transitive(link, q, p), abs=1e-12)
        assert complete_transitive(link, p, 1 - p) == pytest.approx(0.5, abs=1e-12)

    def test_outside_unit_interval(self):
        with pytest.raises(LinkError):
            complete_transitive("logistic", 1.0, 0.5)
