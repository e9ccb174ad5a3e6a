import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from dpcount.bundle import (BinaryForm, ConicBundleTorsor, DegenerateFiber, TorsorError, binary_sum, brute_NT0,
                            count_NT0, nt0_shape, require_valid, validate)
from dpcount.heights import p1_pairs_in_shell
from dpcount.numfield import NumberField
from dpcount.surfaces import load_surface

u, v = sympy.symbols("u v")


@pytest.fixture(scope="module")
def surfaces():
    return {name: load_surface(name) for name in ("dp4", "dp3", "dp2")}


def _torsors(surfaces):
    for name, X in surfaces.items():
        for fib in X.fibrations:
            yield f"{name}/f{fib.index + 1}", X, fib.torsor


def test_validate_fixture_torsors(surfaces):
    expected = {"dp4": 4, "dp3": 5, "dp2": 6}
    for label, X, T in _torsors(surfaces):
        rep = validate(T)
        assert rep.valid, (label, rep.violations)
        assert rep.n == expected[X.variant]


def test_validate_rejects_odd_minor():
    # the (0,1) principal minor u^2 * u - 0 has degree 3
    T = ConicBundleTorsor.from_exprs([[u ** 2, 0, 0], [0, u, 0], [0, 0, v ** 2]])
    rep = validate(T)
    assert not rep.valid
    with pytest.raises(TorsorError):
        require_valid(T)


def test_validate_rejects_inseparable_delta():
    T = ConicBundleTorsor.from_exprs([[u ** 2, 0, 0], [0, u ** 2, 0], [0, 0, v ** 2]])
    assert not validate(T).valid


def test_dp4_fiber_at_1_0_is_substitution(surfaces):
    X = surfaces["dp4"]
    T = X.fibrations[0].torsor
    Q = T.fiber_form(1, 0)
    # f1 fiber: X = (u w1, v w2, v w1, u w2, w3); at (1, 0): (w1, 0, 0, w2, w3)
    w = sympy.symbols("w1:4")
    xs = X.xs
    sub = {xs[0]: w[0], xs[1]: 0, xs[2]: 0, xs[3]: w[1], xs[4]: w[2]}
    bilinear, quadric = (e.subs(sub, simultaneous=True) for e in X.equations())
    assert sympy.expand(bilinear) == 0
    assert sympy.expand(quadric - Q(w)) == 0


def test_degenerate_signal(surfaces):
    T = surfaces["dp3"].fibrations[0].torsor
    roots = [(a, b) for a, b in p1_pairs_in_shell(1, 5) if T.delta(a, b) == 0]
    assert roots
    with pytest.raises(DegenerateFiber):
        T.fiber_form(*roots[0])
    assert T.fiber_form(*roots[0], allow_degenerate=True).is_singular


def test_fiber_determinant_identity(surfaces):
    for label, X, T in _torsors(surfaces):
        E = T.entries
        M = sympy.Matrix(3, 3, lambda i, j: E[i][j].expr() * (2 if i == j else 1))
        assert sympy.expand(M.det() - T.delta.expr()) == 0, label
        # and det of the doubled fiber matrix equals Delta(u, v) pointwise (the doubling factor is 2^0 here)
        rng = random.Random(hash(label) & 0xFFFF)
        for _ in range(30):
            a, b = rng.randint(-40, 40), rng.randint(-40, 40)
            if T.delta(a, b) == 0:
                continue
            assert T.fiber_form(a, b).det == T.delta(a, b)
            # F has half-integers off the diagonal: det F = Delta / 8
            assert T.f_matrix().subs({u: a, v: b}).det() * 8 == T.delta(a, b)


def test_nt0_no_points(surfaces):
    # every shell over Q contains (1, A), so "nothing in range" shows up as fibers without box points
    for name in ("dp3", "dp2"):
        T = surfaces[name].fibrations[0].torsor
        res = count_NT0(T, 16, (1, 1, 1), mode="brute")
        assert res.total == 0 and res.fibers
        assert brute_NT0(T, 16, (1, 1, 1)) == []


@pytest.mark.parametrize("A", [1, 2, 4])
@pytest.mark.parametrize("r", [(3, 4, 5), (12, 12, 12)])
def test_nt0_matches_double_brute(surfaces, A, r):
    for label, X, T in _torsors(surfaces):
        got = count_NT0(T, A, r)
        want = brute_NT0(T, A, r)
        assert sorted(got.points) == sorted(want), label
        assert got.total == len(want)


def test_nt0_matches_double_brute_r50(surfaces):
    for label, X, T in _torsors(surfaces):
        got = count_NT0(T, 1, (50, 50, 50))
        assert got.total == len(brute_NT0(T, 1, (50, 50, 50))), label


def test_nt0_shape():
    assert nt0_shape(2, (4, 4, 4), 6) == pytest.approx(4 * (1 + (64 / 64) ** (1 / 3)))


def _exact_sum(F, A, prec=40):
    total = sympy.Integer(0)
    for a in range(-2 * A, 2 * A):
        for b in range(-2 * A, 2 * A):
            if not A <= max(abs(a), abs(b)) < 2 * A:
                continue
            val = F(a, b)
            if val:
                total += sympy.Integer(abs(val)) ** sympy.Rational(-1, 3)
    return total.evalf(prec)


def test_binary_sum_examples():
    s = binary_sum(BinaryForm((0, 1, 0)), 1)
    assert s.lower <= 4 <= s.upper and s.terms == 4 and s.value == pytest.approx(4)
    F = BinaryForm((1, 0))
    s = binary_sum(F, 2)
    # shell 2 <= max(|u|,|v|) < 4 over all integer pairs: 48 pairs, 36 with u != 0
    assert s.terms == 36
    exact = _exact_sum(F, 2)
    assert sympy.Rational(s.lower) <= exact <= sympy.Rational(s.upper)


@given(c=st.lists(st.integers(-5, 5), min_size=3, max_size=5), A=st.integers(1, 6))
def test_binary_sum_brackets_exact_value(c, A):
    F = BinaryForm(tuple(c))
    if F.is_zero or not F.is_separable():
        return
    s = binary_sum(F, A, precision=48)
    exact = _exact_sum(F, A)
    assert sympy.Rational(s.lower) <= exact <= sympy.Rational(s.upper)
    assert s.upper - s.lower <= Fraction(s.terms + 1, 2 ** 47)
    shell = sum(1 for a in range(-2 * A, 2 * A) for b in range(-2 * A, 2 * A)
                if A <= max(abs(a), abs(b)) < 2 * A)
    assert 0 <= s.value <= shell


def test_binary_sum_quadratic_field():
    K = NumberField.parse("Q(i)")
    s = binary_sum(BinaryForm((0, 1, 0)), 1, field=K)
    # u, v units of Z[i]: 4 * 4 pairs, each with N(uv) = 1
    assert s.terms == 16 and s.lower <= 16 <= s.upper


def test_binary_sum_decreases_when_a_term_is_removed():
    # dropping the single pair (1, 1) from the uv shell lowers the sum by exactly one
    F = BinaryForm((0, 1, 0))
    full = binary_sum(F, 1)
    pairs = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (1, 1) and a * b]
    assert len(pairs) == full.terms - 1
    assert sum(abs(a * b) ** (-1 / 3) for a, b in pairs) < full.value
