"""Exact enumeration of conic points in boxes.

Every routine returns the sorted tuple of canonical primitive integer
points x with Q(x) = 0 and |x_i| <= r_i.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..heights import normalize_ints
from ..lattices import DEFAULT_BUDGET, ResourceError, adjugate, det_int, lll_reduce
from ..numfield import NumberField, gcd_many, canonical_unit, norm_elem
from .forms import TernaryQuadraticForm, find_point, is_soluble, parametrize

_I64_SAFE = 1 << 62


def _is_canonical(x) -> bool:
    for v in x:
        if v:
            return v > 0
    return False


def _keep(x) -> bool:
    return _is_canonical(x) and math.gcd(math.gcd(x[0], x[1]), x[2]) == 1


def _permute_form(Q: TernaryQuadraticForm, perm) -> TernaryQuadraticForm:
    """Form Q' with Q'(y) = Q(x) where x[perm[k]] = y[k]."""
    M = Q.matrix
    Mp = [[M[perm[i]][perm[j]] for j in range(3)] for i in range(3)]
    return TernaryQuadraticForm.from_matrix(Mp)


def brute_points(Q: TernaryQuadraticForm, r: Sequence[int]) -> tuple:
    """Oracle: loop over two coordinates and solve exactly for the third."""
    if Q.field.d != 1:
        return _brute_ring(Q, r)
    r = [int(math.floor(v)) for v in r]
    if Q.coeffs == (0,) * 6:
        raise ValueError("zero form")
    # choose the solved coordinate: nonzero square coefficient, largest radius
    diag = [Q.a(i, i) for i in range(3)]
    cands = [i for i in range(3) if diag[i] != 0]
    if cands:
        k = max(cands, key=lambda i: (r[i], -i))
    else:
        k = max(range(3), key=lambda i: (r[i], -i))
    others = sorted((i for i in range(3) if i != k), key=lambda i: (r[i], i))
    perm = others + [k]
    Qp = _permute_form(Q, perm)
    rp = [r[i] for i in perm]
    pts = _brute_last(Qp, rp)
    out = set()
    for y in pts:
        x = [0, 0, 0]
        for pos, i in enumerate(perm):
            x[i] = y[pos]
        x = tuple(x)
        if _keep(x):
            out.add(x)
    return tuple(sorted(out))


def _brute_last(Q: TernaryQuadraticForm, r) -> list:
    """All integer x with |x_i| <= r_i and Q(x) = 0, solving for x_3."""
    a11, a12, a13, a22, a23, a33 = Q.coeffs
    r1, r2, r3 = r
    bmax = abs(a13) * r1 + abs(a23) * r2
    cmax = abs(a11) * r1 * r1 + abs(a12) * r1 * r2 + abs(a22) * r2 * r2
    use_np = bmax * bmax + 4 * abs(a33) * cmax < _I64_SAFE
    out = []
    if use_np:
        x2 = np.arange(-r2, r2 + 1, dtype=np.int64)
    for x1 in range(-r1, r1 + 1):
        if use_np:
            b = a13 * x1 + a23 * x2
            c = a11 * x1 * x1 + a12 * x1 * x2 + a22 * x2 * x2
            out.extend(_solve_np(x1, x2, a33, b, c, r3))
        else:
            for v in range(-r2, r2 + 1):
                b = a13 * x1 + a23 * v
                c = a11 * x1 * x1 + a12 * x1 * v + a22 * v * v
                for z in _solve_int(a33, b, c, r3):
                    out.append((x1, v, z))
    return out


def _solve_int(a: int, b: int, c: int, R: int) -> list:
    """Integer z with |z| <= R and a z^2 + b z + c = 0."""
    if a == 0:
        if b == 0:
            return list(range(-R, R + 1)) if c == 0 else []
        if c % b == 0 and abs(c // b) <= R:
            return [-c // b]
        return []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    s = math.isqrt(disc)
    if s * s != disc:
        return []
    out = []
    for num in {-b + s, -b - s}:
        if num % (2 * a) == 0:
            z = num // (2 * a)
            if abs(z) <= R:
                out.append(z)
    return out


def _isqrt_np(d):
    s = np.floor(np.sqrt(d.astype(np.float64))).astype(np.int64)
    s = np.where(s * s > d, s - 1, s)
    s = np.where(s * s > d, s - 1, s)
    s = np.where((s + 1) * (s + 1) <= d, s + 1, s)
    s = np.where((s + 1) * (s + 1) <= d, s + 1, s)
    return s


def _solve_np(x1: int, x2, a: int, b, c, R: int) -> list:
    out = []
    if a == 0:
        nz = b != 0
        idx = np.nonzero(nz)[0]
        if idx.size:
            bb, cc = b[idx], c[idx]
            ok = (cc % bb) == 0
            z = -(cc[ok] // bb[ok])
            good = np.abs(z) <= R
            for v, zz in zip(x2[idx][ok][good].tolist(), z[good].tolist()):
                out.append((x1, v, zz))
        idx0 = np.nonzero((~nz) & (c == 0))[0]
        for v in x2[idx0].tolist():
            out.extend((x1, v, z) for z in range(-R, R + 1))
        return out
    disc = b * b - 4 * a * c
    idx = np.nonzero(disc >= 0)[0]
    if not idx.size:
        return out
    d = disc[idx]
    s = _isqrt_np(d)
    sq = s * s == d
    idx, s = idx[sq], s[sq]
    if not idx.size:
        return out
    bb = b[idx]
    for sign in (1, -1):
        num = -bb + sign * s
        ok = (num % (2 * a)) == 0
        z = num[ok] // (2 * a)
        good = np.abs(z) <= R
        for v, zz, ss in zip(x2[idx][ok][good].tolist(), z[good].tolist(), s[ok][good].tolist()):
            if sign == -1 and ss == 0:
                continue
            out.append((x1, v, zz))
    return out


def _brute_ring(Q: TernaryQuadraticForm, r) -> tuple:
    """Triple loop over ring integers for imaginary quadratic fields."""
    from ..heights import ring_ball
    field = Q.field
    balls = [ring_ball(field, int(v)) for v in r]
    out = set()
    for x1 in balls[0]:
        for x2 in balls[1]:
            for x3 in balls[2]:
                x = (x1, x2, x3)
                if not (x1 or x2 or x3):
                    continue
                if Q(x):
                    continue
                lead = next(v for v in x if v)
                if canonical_unit(lead) != field.one:
                    continue
                if norm_elem(gcd_many(list(x), field)) != 1:
                    continue
                out.add(tuple((v.a, v.b) for v in x))
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# parametrization mode

def param_points(Q: TernaryQuadraticForm, r: Sequence[int], base=None) -> tuple:
    if not is_soluble(Q):
        return ()
    if base is None:
        base = find_point(Q)
    par = parametrize(Q, base)
    r = [int(math.floor(v)) for v in r]
    S = par.param_bound(max(r))
    g = par.g
    gmax = max(abs(c) for gi in g for c in gi)
    out = set()
    # the base point comes from the tangent direction, where the linear bound on H(s,t) says nothing
    b0 = normalize_ints(list(base))
    if all(abs(v) <= rv for v, rv in zip(b0, r)):
        out.add(b0)
    if 4 * gmax * (S + 1) ** 2 < _I64_SAFE:
        t = np.arange(-S, S + 1, dtype=np.int64)
        R = np.array(r, dtype=np.int64)
        for s in range(0, S + 1):
            tt = t if s else np.array([1], dtype=np.int64)
            X = [a * s * s + b * s * tt + c * tt * tt for a, b, c in g]
            k = np.gcd(np.gcd(X[0], X[1]), X[2])
            ok = k > 0
            if s:
                ok &= np.gcd(tt, s) == 1
            X = [x[ok] // k[ok] for x in X]
            inb = (np.abs(X[0]) <= R[0]) & (np.abs(X[1]) <= R[1]) & (np.abs(X[2]) <= R[2])
            for x in zip(X[0][inb].tolist(), X[1][inb].tolist(), X[2][inb].tolist()):
                out.add(normalize_ints(x))
    else:
        for s in range(0, S + 1):
            for t in (range(-S, S + 1) if s else (1,)):
                if math.gcd(s, t) != 1:
                    continue
                x = normalize_ints(par(s, t))
                if all(abs(v) <= rv for v, rv in zip(x, r)):
                    out.add(x)
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# lattice kernel

def lattice_points(Q: TernaryQuadraticForm, basis, r: Sequence[int], budget: int = DEFAULT_BUDGET,
                   reduced: bool = False) -> list:
    """Canonical primitive points of Q = 0 in the lattice spanned by `basis` and the box.

    The basis is LLL-reduced in box-scaled coordinates, the two outer
    coefficients are bounded through the exact inverse, and the inner one is
    found by solving the restricted quadratic exactly on its integer interval.
    """
    r = [int(v) for v in r]
    b = [list(map(int, row)) for row in basis]
    if not reduced:
        b = lll_reduce(b, [1.0 / max(v, 1) for v in r])
    det = det_int(b)
    adj = adjugate(b)
    ad = abs(det)
    bounds = [sum(abs(adj[i][k]) * r[i] for i in range(3)) // ad for k in range(3)]
    nodes = (2 * bounds[1] + 1) * (2 * bounds[2] + 1)
    if nodes > budget:
        raise ResourceError(f"lattice kernel needs {nodes} nodes")
    b0, b1, b2 = b
    M = Q.matrix
    alpha = Q(b0)
    Mb0 = [sum(M[i][j] * b0[j] for j in range(3)) for i in range(3)]
    out = []
    for c2 in range(-bounds[2], bounds[2] + 1):
        base2 = [c2 * v for v in b2]
        for c1 in range(-bounds[1], bounds[1] + 1):
            s = [base2[i] + c1 * b1[i] for i in range(3)]
            lo, hi = -bounds[0], bounds[0]
            ok = True
            for i in range(3):
                bi = b0[i]
                if bi > 0:
                    lo = max(lo, -((r[i] + s[i]) // bi))
                    hi = min(hi, (r[i] - s[i]) // bi)
                elif bi < 0:
                    lo = max(lo, -((r[i] - s[i]) // (-bi)))
                    hi = min(hi, (r[i] + s[i]) // (-bi))
                elif abs(s[i]) > r[i]:
                    ok = False
                    break
                if lo > hi:
                    ok = False
                    break
            if not ok:
                continue
            beta = Mb0[0] * s[0] + Mb0[1] * s[1] + Mb0[2] * s[2]
            gamma = Q(s)
            for c0 in _solve_in_range(alpha, beta, gamma, lo, hi):
                x = (c0 * b0[0] + s[0], c0 * b0[1] + s[1], c0 * b0[2] + s[2])
                if _keep(x):
                    out.append(x)
    return out


def _solve_in_range(a: int, b: int, c: int, lo: int, hi: int) -> list:
    if a == 0:
        if b == 0:
            return list(range(lo, hi + 1)) if c == 0 else []
        if c % b == 0:
            z = -c // b
            return [z] if lo <= z <= hi else []
        return []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    s = math.isqrt(disc)
    if s * s != disc:
        return []
    out = []
    for num in ((-b + s, -b - s) if s else (-b,)):
        if num % (2 * a) == 0:
            z = num // (2 * a)
            if lo <= z <= hi:
                out.append(z)
    return out


def count_in_box(Q: TernaryQuadraticForm, r: Sequence[int], mode: str = "brute", **kw) -> tuple:
    """Exact point set N(Q, r) as sorted canonical tuples.

    Modes: 'brute', 'parametrize', 'sieve', 'lattice' (determinant covers plus
    optional sieve prime) and 'auto' (cheapest exact route).
    """
    if Q.is_singular:
        raise ValueError("singular form")
    if mode == "brute":
        return brute_points(Q, r)
    if Q.field.d != 1:
        raise NotImplementedError(f"mode {mode!r} is implemented over Q only")
    if mode == "parametrize":
        return param_points(Q, r, kw.get("base"))
    if mode == "sieve":
        from .sieve import quadmain_sieve
        return quadmain_sieve(Q, r, **kw)[0]
    if mode in ("lattice", "auto"):
        from .cover import cover_points
        return cover_points(Q, r, auto=(mode == "auto"), **kw)
    raise ValueError(f"unknown mode {mode!r}")
