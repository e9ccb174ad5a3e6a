import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from dpcount.heights import (Box, count_box, enumerate_P1, height, normalize, normalize_ints, p1_pairs_in_shell,
                             sup_norm)
from dpcount.numfield import NumberField, norm_elem

QQ = NumberField.parse("Q")
QI = NumberField.parse("Q(i)")
QFIELDS = [NumberField.parse(s) for s in ("Q(i)", "Q(sqrt(-2))", "Q(sqrt(-3))")]


def test_normalize_examples():
    assert normalize([4, 6, 10]).coords == (2, 3, 5)
    assert normalize([-2, 3]).coords == (2, -3)
    assert normalize([QI.elem(0, 2), QI.elem(2)], QI).coords == (QI.elem(1), QI.elem(0, -1))


def test_height_examples():
    assert height(normalize([3, 4, 5])) == 5
    assert height(normalize([QI.elem(1), QI.elem(1, 1)], QI), QI) == 2
    assert height(normalize([0, 1])) == 1


def test_count_box_examples():
    assert count_box(0, Fraction(11, 2)) == 11
    assert count_box(0, 3, QI) == 9
    assert count_box(Fraction(1, 2), Fraction(2, 5)) == 0


def test_enumerate_P1_small():
    pts = {p.coords for p in enumerate_P1(1, closed=True)}
    assert pts == {(0, 1), (1, 0), (1, 1), (1, -1)}
    assert list(enumerate_P1(3, 3)) == []


def _brute_primitive_pairs(B):
    out = set()
    for u in range(-B, B + 1):
        for v in range(-B, B + 1):
            if (u or v) and math.gcd(u, v) == 1:
                out.add(normalize_ints([u, v]))
    return out


@pytest.mark.parametrize("B", [1, 10, 100])
def test_enumerate_P1_matches_brute(B):
    got = [p.coords for p in enumerate_P1(B, closed=True)]
    assert len(got) == len(set(got))
    assert set(got) == _brute_primitive_pairs(B)


def test_enumeration_order_lexicographic():
    got = [p.coords for p in enumerate_P1(1, 10)]
    assert got == sorted(got)


@given(lo=st.integers(1, 40), width=st.integers(0, 40))
def test_shell_pairs_closed(lo, width):
    hi = lo + width
    got = set(p1_pairs_in_shell(lo, hi))
    # enumerate_P1 with the half-open range drops the top layer
    half = {p.coords for p in enumerate_P1(lo, hi)}
    assert half == {p for p in got if max(map(abs, p)) < hi}
    want = {p for p in _brute_primitive_pairs(hi) if lo <= max(map(abs, p)) <= hi}
    assert {normalize_ints(list(p)) for p in got} == want


coords = st.lists(st.integers(-50, 50), min_size=2, max_size=4)


@given(x=coords, lam=st.integers(-30, 30).filter(lambda v: v != 0))
def test_normalize_unique_over_Q(x, lam):
    assume(any(x))
    a = normalize(x)
    b = normalize([lam * c for c in x])
    assert a == b
    assert height(a) == height(b)
    assert math.gcd(*a.coords) == 1
    first = next(c for c in a.coords if c)
    assert first > 0


@pytest.mark.parametrize("K", QFIELDS, ids=str)
@given(re=st.lists(st.integers(-20, 20), min_size=3, max_size=3),
       im=st.lists(st.integers(-20, 20), min_size=3, max_size=3),
       la=st.integers(-6, 6), lb=st.integers(-6, 6))
def test_normalize_unique_over_quadratic(K, re, im, la, lb):
    x = [K.elem(a, b) for a, b in zip(re, im)]
    lam = K.elem(la, lb)
    assume(any(x) and lam)
    a = normalize(x, K)
    b = normalize([lam * c for c in x], K)
    assert a == b
    assert height(a, K) == height(b, K)
    for u in K.units:
        assert normalize([u * c for c in x], K) == a


@pytest.mark.parametrize("K", [QQ] + QFIELDS, ids=str)
@given(re=st.lists(st.integers(-30, 30), min_size=2, max_size=3),
       im=st.lists(st.integers(-30, 30), min_size=2, max_size=3))
def test_height_sup_norm_sandwich(K, re, im):
    n = min(len(re), len(im))
    x = [K.elem(re[i], im[i] if K.d != 1 else 0) for i in range(n)]
    assume(any(x))
    p = normalize(x, K)
    h = height(p, K)
    s = sup_norm(p, K)
    # s_k = 1 and the ideal generated is o, so H = max of the local norms = ||x||*
    assert h <= s
    assert s == max(norm_elem(K.coerce(c)) for c in p.coords)


@given(t=st.fractions(-3, 3, max_denominator=7), B=st.fractions(0, 12, max_denominator=5))
def test_count_box_rational_brute(t, B):
    lo, hi = math.floor(t - B) - 1, math.ceil(t + B) + 1
    want = sum(1 for x in range(lo, hi + 1) if abs(x - t) < B)
    assert count_box(t, B) == want


def test_box_contains_is_non_strict():
    b = Box((3, 5))
    assert b.contains([3, -5])
    assert not b.contains([4, 0])
