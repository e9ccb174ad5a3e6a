import itertools
import json
import math
import random

import pytest
import sympy

from dpcount.heights import normalize_ints
from dpcount.surfaces import (FIXTURE_DIR, Curve, FixtureError, InvariantError, count_points, exceptional_filter,
                              fiber_cover_complete, functoriality_violations, load_surface, surface_from_dict)

NAMES = ("dp4", "dp3", "dp2")


@pytest.fixture(scope="module")
def S():
    return {n: load_surface(n) for n in NAMES}


@pytest.fixture(scope="module")
def pts50(S):
    return {n: count_points(S[n], 50 if n != "dp2" else 25, "brute")[0] for n in NAMES}


def _singular_dp2():
    # q1 = x1^2 + x2^2, q2 = x2^2 + x3^2, q3 = x1 x3
    return {"name": "dp2-singular", "variant": "dp2", "field": "Q",
            "q": [[1, 0, 0, 1, 0, 0], [0, 0, 0, 1, 0, 1], [0, 0, 1, 0, 0, 0]], "curves": []}


def test_fixtures_load_and_certify(S):
    assert S["dp4"].degree == 4 and S["dp3"].degree == 3 and S["dp2"].degree == 2
    for n in NAMES:
        d = json.loads((FIXTURE_DIR / f"{n}.json").read_text())
        assert surface_from_dict(d, certify=True).variant == n


def test_singular_dp2_fixture_is_singular():
    # t^2 = (x1^2 + x2^2)(x2^2 + x3^2) + x1^2 x3^2 is singular at [0 : 1 : 0 : 0]
    t, x1, x2, x3 = sympy.symbols("t x1 x2 x3")
    F = t ** 2 - ((x1 ** 2 + x2 ** 2) * (x2 ** 2 + x3 ** 2) + x1 ** 2 * x3 ** 2)
    at = {t: 0, x1: 1, x2: 0, x3: 0}
    assert F.subs(at) == 0
    assert all(sympy.diff(F, s).subs(at) == 0 for s in (t, x1, x2, x3))
    with pytest.raises(InvariantError):
        surface_from_dict(_singular_dp2())


def test_malformed_fixtures():
    with pytest.raises(FixtureError):
        surface_from_dict({"variant": "dp5", "field": "Q"})
    d = json.loads((FIXTURE_DIR / "dp4.json").read_text())
    d["curves"] = [{"name": "bad", "equations": ["x0 + y9"]}]
    with pytest.raises(FixtureError):
        surface_from_dict(d)
    d["curves"] = ["x0"]
    with pytest.raises(FixtureError):
        surface_from_dict(d)
    d = json.loads((FIXTURE_DIR / "dp4.json").read_text())
    d["field"] = "Q(i)"
    with pytest.raises(FixtureError):
        surface_from_dict(d)


def test_fibration_examples(S):
    X = S["dp4"]
    P = next(p for p in count_points(X, 20, "brute")[0] if p[0] and p[2])
    assert X.fibration(0, P) == normalize_ints([P[0], P[2]])
    D = S["dp3"]
    # on x0 = L1 = 0 the first branch vanishes and [L2 L3 : Q] is used
    P = (0, 0, 1, -1)
    assert D.contains(P)
    L = [P[1], P[2], P[3]]
    q = D.branches(0, P)
    assert q[0] == (0, 0)
    assert D.fibration(0, P) == normalize_ints(list(q[1]))


@pytest.mark.parametrize("name", NAMES)
def test_branches_agree(S, pts50, name):
    X = S[name]
    rng = random.Random(1)
    pts = list(pts50[name])
    sample = pts if len(pts) <= 1000 else rng.sample(pts, 1000)
    for P in sample:
        for i in range(X.m):
            assert X.branches_agree(i, P), (P, i)


@pytest.mark.parametrize("name", NAMES)
def test_functoriality_and_cover(S, pts50, name):
    X = S[name]
    assert functoriality_violations(X, pts50[name]) == []
    assert fiber_cover_complete(X, pts50[name]) == []


def test_functoriality_constants(S):
    assert S["dp4"].functoriality_constant() == 1
    assert S["dp3"].functoriality_constant() == 6
    assert S["dp2"].functoriality_constant() == 5


def _b1_oracle(X):
    out = set()
    if X.variant == "dp2":
        for x in itertools.product((-1, 0, 1), repeat=3):
            if not any(x) or normalize_ints(list(x)) != x:
                continue
            f = X.quartic(x)
            t = math.isqrt(f) if f >= 0 else -1
            if t >= 0 and t * t == f:
                out.update({(t,) + x, (-t,) + x})
    else:
        for x in itertools.product((-1, 0, 1), repeat=len(X.var_names)):
            if any(x) and normalize_ints(list(x)) == x and X.contains(x):
                out.add(x)
    return {P for P in out if X.in_U(P)}


@pytest.mark.parametrize("name", NAMES)
def test_B1_hand_enumeration(S, name):
    X = S[name]
    want = _b1_oracle(X)
    assert set(count_points(X, 1, "brute")[0]) == want
    assert set(count_points(X, 1, "fibration")[0]) == want


@pytest.mark.parametrize("name,B", [("dp4", 10), ("dp3", 10), ("dp2", 6)])
def test_methods_agree_small(S, name, B):
    a, ra = count_points(S[name], B, "fibration")
    b, rb = count_points(S[name], B, "brute")
    assert a == b
    assert ra["N"] == rb["N"] == len(a)


@pytest.mark.parametrize("name", NAMES)
def test_monotone_and_dedup(S, name):
    X = S[name]
    prev = set()
    for B in (2, 4, 8):
        cur = set(count_points(X, B, "brute")[0])
        assert prev <= cur
        prev = cur
    pts = list(prev)
    kept, removed = exceptional_filter(pts + pts, (), X)
    assert removed == 0 and set(kept) == prev


def test_exceptional_filter_line(S):
    X = S["dp4"]
    line = Curve("L", ("x0", "x2", "x4"))
    pts = [(0, 1, 0, t, 0) for t in range(-3, 4)] + [(1, 1, 1, 1, 1)]
    kept, removed = exceptional_filter(pts, [line], X)
    assert removed == 7 and kept == [(1, 1, 1, 1, 1)]
    assert exceptional_filter(pts, [], X) == (pts, 0)


def test_removal_count_stable_across_methods():
    d = json.loads((FIXTURE_DIR / "dp4.json").read_text())
    d["curves"] = [{"name": "section x0 = x1", "equations": ["x0 - x1"]}]
    X = surface_from_dict(d)
    a, ra = count_points(X, 30, "fibration")
    b, rb = count_points(X, 30, "brute")
    assert a == b
    assert ra["removed_listed"] == rb["removed_listed"] > 0
    assert ra["u_filter"] == "structural+listed"


def test_structural_filter_removes_fiber_components(S):
    # dp3: points with x0 = 0 lie on the three lines of the plane x0 = 0
    X = S["dp3"]
    for P in X.brute_points(10):
        if P[0] == 0:
            assert not X.in_U(P)


def test_threads_do_not_change_result(S):
    a, ra = count_points(S["dp3"], 15, "fibration", threads=1)
    b, rb = count_points(S["dp3"], 15, "fibration", threads=3)
    assert a == b and ra == rb
