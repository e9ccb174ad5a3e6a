import math
import random

import pytest
from hypothesis import given, strategies as st

from dpcount.fitting import FitError, fit_exponent

GRID = [10, 20, 40, 80, 160, 320]


def test_linear_and_quadratic():
    assert fit_exponent([(b, b) for b in GRID]).slope == pytest.approx(1, abs=1e-12)
    f = fit_exponent([(b, 3 * b * b) for b in GRID])
    assert f.slope == pytest.approx(2, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert f.residual < 1e-12


def test_noisy_four_thirds():
    rng = random.Random(7)
    pts = [(b, 5 * b ** (4 / 3) * (1 + rng.uniform(-0.01, 0.01))) for b in GRID]
    assert abs(fit_exponent(pts).slope - 4 / 3) < 0.05


@given(st.floats(0.1, 3), st.floats(0.5, 100))
def test_recovers_power_law(a, c):
    assert fit_exponent([(b, c * b ** a) for b in GRID]).slope == pytest.approx(a, abs=1e-9)


def test_zero_counts_dropped_and_errors():
    assert fit_exponent([(1, 0), (2, 2), (4, 4), (8, 8)]).n == 3
    with pytest.raises(FitError):
        fit_exponent([(1, 0), (2, 0), (4, 4)])
    with pytest.raises(FitError):
        fit_exponent([(5, 1), (5, 2), (5, 3)])


def test_to_dict_is_rounded():
    d = fit_exponent([(b, b ** 1.5) for b in GRID]).to_dict()
    assert d["n"] == 6 and d["slope"] == round(d["slope"], 12)
