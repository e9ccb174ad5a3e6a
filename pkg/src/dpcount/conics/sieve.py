"""The residue-class sieve for conic points in a box.

A prime p of size about c R^{1/3} not dividing det M is chosen.  Every
primitive zero reduces to a smooth point of the conic mod p, and the zeros
above a fixed residue class lie in a lattice of determinant p^3.  When the
third successive minimum of that lattice with respect to the box exceeds 1,
all its box points lie in the plane of the first two minima, which meets the
conic in at most two points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import nextprime

from ..heights import normalize_ints
from ..lattices import (BoxRegion, IntegerLattice, ResourceError, congruence_basis, hnf,
                        successive_minima)
from ..numfield import _xgcd
from .forms import TernaryQuadraticForm, is_soluble


@dataclass
class SieveDiagnostics:
    prime: int | None
    classes: int = 0
    plane_classes: int = 0
    enumerated_classes: int = 0
    points: int = 0
    R: int = 1
    ratio: float = 0.0
    fallback: str | None = None
    per_class: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"prime": self.prime, "classes": self.classes, "plane_classes": self.plane_classes,
                "enumerated_classes": self.enumerated_classes, "points": self.points,
                "R": self.R, "ratio": self.ratio, "fallback": self.fallback,
                "per_class_histogram": {str(k): v for k, v in sorted(self.per_class.items())}}


def conic_points_mod_p(Q: TernaryQuadraticForm, p: int) -> list:
    """Projective zeros of Q over F_p, first nonzero coordinate scaled to 1 at the end."""
    a11, a12, a13, a22, a23, a33 = (c % p for c in Q.coeffs)
    sq: dict = {}
    for i in range(p):
        sq.setdefault(i * i % p, i)

    def roots(a, b, c):
        a, b, c = a % p, b % p, c % p
        if a == 0:
            if b == 0:
                return list(range(p)) if c == 0 else []
            return [(-c * pow(b, -1, p)) % p]
        disc = (b * b - 4 * a * c) % p
        if disc not in sq:
            return []
        s = sq[disc]
        inv = pow(2 * a, -1, p)
        return sorted({(-b + s) * inv % p, (-b - s) * inv % p})

    pts = []
    for x in range(p):
        # (x, y, 1)
        for y in roots(a22, a12 * x + a23, a11 * x * x + a13 * x + a33):
            pts.append((x, y, 1))
    # z = 0: (x, 1, 0) and (1, 0, 0)
    for x in roots(a11, a12, a22):
        pts.append((x, 1, 0))
    if a11 == 0:
        pts.append((1, 0, 0))
    out = []
    for v in pts:
        lead = next(c for c in v if c)
        inv = pow(lead, -1, p)
        out.append(tuple(c * inv % p for c in v))
    return sorted(set(out))


def hensel_lift(Q: TernaryQuadraticForm, x, p: int) -> tuple:
    """x1 = x mod p with Q(x1) = 0 mod p^2 (x a smooth point mod p)."""
    g = [v % p for v in Q.gradient(x)]
    j = next((i for i in range(3) if g[i]), None)
    if j is None:
        raise AssertionError("singular point mod p")
    h = (Q(x) // p) % p
    y = [0, 0, 0]
    y[j] = (-h * pow(g[j], -1, p)) % p
    x1 = tuple(x[i] + p * y[i] for i in range(3))
    assert Q(x1) % (p * p) == 0
    return x1


def class_rows(Q: TernaryQuadraticForm, x, p: int) -> list:
    """Congruence rows of L_p: w proportional to x mod p and w.grad Q(x1) = 0 mod p^2."""
    x1 = hensel_lift(Q, x, p)
    j = next(i for i in range(3) if x[i] % p)
    rows = []
    for i in range(3):
        if i == j:
            continue
        c = [0, 0, 0]
        c[i] = x[j] % p
        c[j] = -x[i] % p
        rows.append((tuple(c), p))
    g = Q.gradient(x1)
    rows.append((tuple(v % (p * p) for v in g), p * p))
    return rows


def choose_prime(Q: TernaryQuadraticForm, R: int, c: float = 4.0, tries: int = 8):
    """Smallest prime p >= c R^{1/3} with p not dividing 2 det M, among a few candidates."""
    start = max(3, math.ceil(c * R ** (1.0 / 3.0)))
    p = int(nextprime(start - 1))
    for _ in range(tries):
        if Q.det % p:
            return p
        p = int(nextprime(p))
    return None


def _plane_points(Q, u1, u2):
    """Zeros of Q on the rational plane spanned by u1, u2 (at most two points)."""
    n = [u1[1] * u2[2] - u1[2] * u2[1], u1[2] * u2[0] - u1[0] * u2[2], u1[0] * u2[1] - u1[1] * u2[0]]
    g = math.gcd(math.gcd(n[0], n[1]), n[2])
    n = [v // g for v in n]
    v1, v2 = _plane_basis(n)
    A, B, C = Q(v1), Q.bilinear(v1, v2), Q(v2)
    sols = []
    if A == 0 and B == 0 and C == 0:
        raise AssertionError("plane inside a non-singular conic")
    if A == 0:
        # Q = b (B a + C b)
        sols.append((1, 0))
        sols.append((C, -B))
    else:
        disc = B * B - 4 * A * C
        if disc >= 0:
            s = math.isqrt(disc)
            if s * s == disc:
                sols.append((-B + s, 2 * A))
                sols.append((-B - s, 2 * A))
    out = set()
    for a, b in sols:
        if a == 0 and b == 0:
            continue
        x = [a * v1[i] + b * v2[i] for i in range(3)]
        if any(x):
            out.add(normalize_ints(x))
    return out


def _plane_basis(n):
    """Basis of the integer vectors orthogonal to the primitive vector n."""
    n = list(n)
    basis = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    vals = n[:]
    k0 = next(k for k, v in enumerate(vals) if v)
    basis[0], basis[k0] = basis[k0], basis[0]
    vals[0], vals[k0] = vals[k0], vals[0]
    for j in (1, 2):
        if vals[j] == 0:
            continue
        g, s, t = _xgcd(vals[0], vals[j])
        a, b = vals[0] // g, vals[j] // g
        b0, bj = basis[0], basis[j]
        basis[0] = [s * x + t * y for x, y in zip(b0, bj)]
        basis[j] = [a * y - b * x for x, y in zip(b0, bj)]
        vals[0], vals[j] = g, 0
    return basis[1], basis[2]


def quadmain_sieve(Q: TernaryQuadraticForm, r, c: float = 4.0, budget: int = 2_000_000) -> tuple:
    """(point set, diagnostics) by the residue-class sieve; same set as count_in_box."""
    from .count import brute_points, lattice_points
    r = [int(v) for v in r]
    R = r[0] * r[1] * r[2]
    if Q.field.d != 1:
        raise NotImplementedError("sieve over Q only")
    if not is_soluble(Q):
        d = SieveDiagnostics(None, R=R, fallback="insoluble")
        return (), d
    p = choose_prime(Q, R, c)
    if p is None:
        pts = brute_points(Q, r)
        d = SieveDiagnostics(None, points=len(pts), R=R, ratio=len(pts) / R ** (1 / 3), fallback="no-prime")
        return pts, d
    diag = SieveDiagnostics(p, R=R)
    S = BoxRegion(tuple(r))
    out = set()
    for x in conic_points_mod_p(Q, p):
        diag.classes += 1
        rows = class_rows(Q, x, p)
        basis = congruence_basis(rows, 3)
        lat = IntegerLattice(hnf(basis, 3))
        assert lat.det == p ** 3
        found = set()
        try:
            mins = successive_minima(lat, S, budget, cap=1)
        except ResourceError:
            mins = None
        if mins is not None and len(mins.values) < 3:
            diag.plane_classes += 1
            if len(mins.values) == 2:
                cands = _plane_points(Q, mins.witnesses[0], mins.witnesses[1])
            elif len(mins.values) == 1:
                cands = {normalize_ints(mins.witnesses[0])}
            else:
                cands = set()
            for y in cands:
                if Q(y) == 0 and all(abs(v) <= rv for v, rv in zip(y, r)) and y in lat:
                    found.add(y)
        else:
            diag.enumerated_classes += 1
            found.update(lattice_points(Q, lat.basis, r, budget))
        diag.per_class[len(found)] = diag.per_class.get(len(found), 0) + 1
        out |= found
    pts = tuple(sorted(out))
    diag.points = len(pts)
    diag.ratio = len(pts) / R ** (1 / 3)
    return pts, diag
