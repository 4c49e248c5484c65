import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanosentry.errors import QuadratureError
from nanosentry.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, gk15, integrate


def test_weights_sum_to_interval_length():
    assert math.isclose(KRONROD_WEIGHTS.sum(), 2.0, rel_tol=1e-14)
    assert math.isclose(GAUSS_WEIGHTS.sum(), 2.0, rel_tol=1e-14)


@pytest.mark.parametrize("degree", range(0, 23))
def test_kronrod_rule_exact_for_polynomials(degree):
    # 15-point Kronrod is exact through degree 22 on [-1, 1].
    value, _ = gk15(lambda x: x**degree, -1.0, 1.0)
    exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
    assert value == pytest.approx(exact, abs=1e-14)


def test_error_estimate_vanishes_for_low_degree():
    _, err = gk15(lambda x: 3 * x**5 - x**2 + 1, 0.0, 2.0)
    assert err < 1e-13


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 20.0), st.floats(-3.0, 3.0), st.floats(0.01, 5.0))
def test_integrate_matches_closed_forms(k, a, width):
    b = a + width
    value, _ = integrate(lambda x: np.exp(-k * x), a, b)
    exact = (math.exp(-k * a) - math.exp(-k * b)) / k
    assert value == pytest.approx(exact, rel=1e-9, abs=1e-14)


def test_integrable_endpoint_singularity():
    value, _ = integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0, max_subdivisions=500)
    assert value == pytest.approx(2.0, rel=1e-6)


def test_reversed_and_empty_intervals():
    f = lambda x: x**2
    assert integrate(f, 1.0, 1.0)[0] == 0.0
    assert integrate(f, 1.0, 0.0)[0] == pytest.approx(-1 / 3, rel=1e-12)


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1 / x), 1e-6, 1.0, rel_tol=1e-14, abs_tol=0.0, max_subdivisions=3)
