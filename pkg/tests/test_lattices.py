import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dpcount.lattices import (BoxRegion, IntegerLattice, LocalCondition, ResourceError, box_points, det_int,
                              elementary_divisors, from_local, hnf, lattice_index, lll_reduce, minkowski_check,
                              rank_frac, scale_inclusion, successive_minima)
from dpcount.numfield import NumberField

QI = NumberField.parse("Q(i)")


def test_from_local_examples():
    assert from_local([LocalCondition(3, (((1, 0), 1),))], 2).det == 3
    assert from_local([LocalCondition(5, (((1, -7, 0), 2),))], 3).det == 25
    assert from_local([], 3).det == 1


@given(e1=st.integers(1, 3), e2=st.integers(1, 3), c=st.integers(0, 50))
def test_from_local_det_multiplicative(e1, e2, c):
    a = LocalCondition(3, (((1, c, 0), e1),))
    b = LocalCondition(5, (((0, 1, c), e2),))
    both = from_local([a, b], 3)
    assert both.det == from_local([a], 3).det * from_local([b], 3).det


def test_minima_examples():
    m = successive_minima(IntegerLattice.standard(3), BoxRegion((1, 1, 1)))
    assert m.values == (1, 1, 1)
    lhs, rhs = minkowski_check(m, BoxRegion((1, 1, 1)), 1)
    assert lhs == rhs == 64
    L = IntegerLattice.from_generators([(1, 0), (0, 5)], 2)
    assert successive_minima(L, BoxRegion((1, 1))).values == (1, 5)


def _exhaustive_minima(L: IntegerLattice, radii):
    """Successive minima by listing every lattice vector in growing boxes."""
    n = L.dim
    K = 1
    while True:
        vecs = []
        for c in itertools.product(range(-K, K + 1), repeat=n):
            if any(c) and c in L:
                g = max(Fraction(abs(x), r) for x, r in zip(c, radii))
                vecs.append((g, c))
        vecs.sort()
        chosen, vals = [], []
        for g, v in vecs:
            if rank_frac(chosen + [v]) > len(chosen):
                chosen.append(v)
                vals.append(g)
            if len(chosen) == n:
                break
        # everything with gauge <= K / max(radii) was seen
        if len(chosen) == n and vals[-1] <= Fraction(K, max(radii)):
            return tuple(vals)
        K *= 2


def _random_hnf(rng, n, dmax):
    while True:
        diag = [rng.randint(1, 12) for _ in range(n)]
        d = 1
        for x in diag:
            d *= x
        if d <= dmax:
            break
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = diag[i]
        for j in range(i + 1, n):
            rows[i][j] = rng.randrange(diag[j])
    return IntegerLattice(hnf(rows, n))


def test_minima_match_exhaustive_search():
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randint(1, 3)
        L = _random_hnf(rng, n, 1000)
        radii = (1,) * n
        assert successive_minima(L, BoxRegion(radii)).values == _exhaustive_minima(L, radii)


def test_minima_match_exhaustive_search_anisotropic():
    rng = random.Random(12)
    for _ in range(25):
        L = _random_hnf(rng, 3, 300)
        radii = tuple(rng.randint(1, 6) for _ in range(3))
        assert successive_minima(L, BoxRegion(radii)).values == _exhaustive_minima(L, radii)


mats = st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=3, max_size=3)


@given(M=mats, r=st.lists(st.integers(1, 20), min_size=3, max_size=3))
def test_minkowski_and_witnesses(M, r):
    if det_int(M) == 0:
        return
    L = IntegerLattice.from_generators(M, 3)
    S = BoxRegion(tuple(r))
    m = successive_minima(L, S)
    assert list(m.values) == sorted(m.values)
    assert det_int([list(w) for w in m.witnesses]) != 0
    for w, lam in zip(m.witnesses, m.values):
        assert tuple(w) in L
        assert max(Fraction(abs(x), ri) for x, ri in zip(w, r)) == lam
    lhs, rhs = minkowski_check(m, S, L.det)
    assert lhs <= rhs


@pytest.mark.parametrize("name", ["Q(i)", "Q(sqrt(-2))", "Q(sqrt(-3))", "Q(sqrt(-7))"])
@pytest.mark.parametrize("r", [(1, 1), (2, 7), (5, 3)])
def test_minkowski_quadratic_field(name, r):
    K = NumberField.parse(name)
    # x1 = (1+w) x2 mod (3) and mod (5): rank 2 over o, flattened to Z^4
    conds = [LocalCondition(K.elem(q), (((1, K.elem(-1, -1)), 1),)) for q in (3, 5)]
    L = from_local(conds, 2, K)
    S = BoxRegion(r)
    m = successive_minima(L, S)
    assert len(m.values) == 2 and m.values[0] <= m.values[1]
    lhs, rhs = minkowski_check(m, S, L.det)
    assert lhs <= rhs


def test_scale_inclusion_examples():
    Z2 = IntegerLattice.standard(2)
    twoZ = IntegerLattice.from_generators([(2, 0), (0, 2)], 2)
    assert scale_inclusion(twoZ, Z2) == Fraction(1, 2)
    assert lattice_index(twoZ, Z2) == 4
    assert scale_inclusion(Z2, Z2) == 1
    L3 = IntegerLattice.from_generators([(1, 1), (0, 3)], 2)
    assert scale_inclusion(L3, Z2) == Fraction(1, 3)
    assert lattice_index(L3, Z2) == 3 <= 9


@given(M=mats)
def test_scale_inclusion_bound(M):
    if det_int(M) == 0:
        return
    L = IntegerLattice.from_generators(M, 3)
    G = IntegerLattice.standard(3)
    a = scale_inclusion(L, G)
    # G is inside a L, and the index is at most N(a^-1)^n
    inv = 1 / a
    for e in G.basis:
        v = [int(x * inv) for x in e]
        assert tuple(v) in L
    assert lattice_index(L, G) <= inv ** 3


@given(M=mats)
def test_elementary_divisors_product(M):
    d = abs(det_int(M))
    ed = elementary_divisors(M)
    prod = 1
    for x in ed:
        prod *= x
    assert prod == d
    if d:
        assert all(b % a == 0 for a, b in zip(ed, ed[1:]))


@given(M=mats, r=st.lists(st.integers(1, 12), min_size=3, max_size=3))
def test_box_points_complete(M, r):
    if det_int(M) == 0:
        return
    L = IntegerLattice.from_generators(M, 3)
    got = {tuple(p) for p in box_points(lll_reduce([list(b) for b in L.basis]), r)}
    want = {p for p in itertools.product(*[range(-x, x + 1) for x in r]) if p in L}
    assert got == want


def test_budget_raises():
    with pytest.raises(ResourceError):
        box_points([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [100, 100, 100], budget=10)
